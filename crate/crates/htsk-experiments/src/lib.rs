//! Experiment harness for the `htsk` sketching library: planners,
//! distortion trials, sketch-length sweeps, lower-bound probes, an
//! adversarial witness construction, and deterministic report emission.
//!
//! Every runner takes explicit seeds or stream handles and produces
//! byte-identical reports across runs and thread counts.

pub mod config;
pub mod containment;
pub mod counter;
pub mod embedding_runs;
pub mod linalg;
pub mod probes;
pub mod report;
pub mod sets;
pub mod witness;

pub use config::{Constants, RunConfig, Widths};
pub use containment::run_dvoretzky_containment;
pub use counter::{
    body_width, build_counterexample_set, local_body_width, run_counterexample_comparison,
    CounterexampleSpec,
};
pub use embedding_runs::{
    encode_instance, plan_with_widths, run_embedding_trial, run_regularity, run_sweep,
};
pub use probes::{run_b1_separation, run_minimal_shift, run_order_stats};
pub use report::{
    emit_report, ComparisonReport, ContainmentReport, DistortionReport, FrequencyReport,
    PlanReport, RegularityReportWrap, Report, ReportFormat, SeparationTable, SweepCurve,
    WitnessResult,
};
pub use witness::{find_adversarial_pair, suggest_witness_k, Body};
