//! Command-line entry point for the sketching experiments. Every
//! subcommand samples its inputs from the given seed, runs one experiment,
//! writes a deterministic report to `<out>/<experiment>-<seed>.<ext>`, and
//! prints a one-line summary.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use htsk::embedding::{write_sketch_set, SketchSet};
use htsk::geomlib::PointSet;
use htsk::oracle::{separation_probability, SeparationRegion};
use htsk::randkit::{derive_stream, sample_dither, sample_gaussian_matrix};
use htsk_experiments::{
    emit_report, find_adversarial_pair, plan_with_widths, run_b1_separation,
    run_counterexample_comparison, run_dvoretzky_containment, run_embedding_trial,
    run_minimal_shift, run_order_stats, run_regularity, run_sweep, suggest_witness_k, Body,
    Constants, CounterexampleSpec, ReportFormat, RunConfig, SeparationTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> ReportFormat {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "htsk",
    about = "Dithered sign-sketch experiments: planning, distortion, sweeps, and lower bounds"
)]
struct Cli {
    /// Root seed for every random stream in the run.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// JSON run configuration; must name the same experiment as the
    /// subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the report file.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Report encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Override the experiment's trial/seed count.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker-thread count (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan sketch parameters for a sampled ball point set.
    Plan,
    /// Sketch a sampled set once and report worst-pair distortion.
    Embed,
    /// Run the regularity checks on a planned instance.
    Verify,
    /// Success rate of the distortion target across sketch lengths.
    Sweep,
    /// Failure rates at a width-only versus a planned sketch length.
    Counterexample,
    /// Search one instance for an adversarial short vector.
    Adversary,
    /// Failure frequency for a 2-delta shift under an undersized dither.
    Minshift,
    /// Frequency of the linear envelope on sorted dither magnitudes.
    Orderstats,
    /// Inradius of random projections against the gaussian width.
    Dvoretzky,
    /// Frequency with which random directions separate all pairs.
    #[command(name = "b1-separate")]
    B1Separate,
    /// Exact sign-separation probabilities over a grid.
    #[command(name = "sep-prob")]
    SepProb,
}

impl Command {
    fn label(&self) -> &'static str {
        match self {
            Command::Plan => "plan",
            Command::Embed => "embed",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Counterexample => "counterexample",
            Command::Adversary => "adversary",
            Command::Minshift => "minshift",
            Command::Orderstats => "orderstats",
            Command::Dvoretzky => "dvoretzky",
            Command::B1Separate => "b1-separate",
            Command::SepProb => "sep-prob",
        }
    }
}

// ---------------------------------------------------------------------------
// Per-experiment parameters (defaults are the desk-scale configurations).
// ---------------------------------------------------------------------------

fn d_usize<const N: usize>() -> usize {
    N
}

fn d_u64<const N: u64>() -> u64 {
    N
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetParams {
    #[serde(default = "d_usize::<12>")]
    n: usize,
    #[serde(default = "d_usize::<40>")]
    count: usize,
    #[serde(default = "d_delta")]
    delta: f64,
}

fn d_delta() -> f64 {
    0.2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepParams {
    #[serde(default = "d_usize::<12>")]
    n: usize,
    #[serde(default = "d_usize::<150>")]
    count: usize,
    #[serde(default = "d_delta")]
    delta: f64,
    #[serde(default = "d_sweep_grid")]
    m_grid: Vec<usize>,
    #[serde(default = "d_u64::<20>")]
    trials: u64,
}

fn d_sweep_grid() -> Vec<usize> {
    (6..=14).map(|p| 1usize << p).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CounterParams {
    #[serde(flatten)]
    spec: CounterexampleSpec,
    #[serde(default = "d_u64::<50>")]
    seeds: u64,
}

impl Default for CounterParams {
    fn default() -> Self {
        CounterParams {
            spec: CounterexampleSpec {
                r: 4,
                epsilon: 0.04,
                eta: 0.8,
                delta: 0.1,
                i_sphere: 32,
                i_ball: 16,
                j_sphere: 32,
                products: 32,
            },
            seeds: 50,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdversaryParams {
    #[serde(default = "d_usize::<512>")]
    m: usize,
    #[serde(default = "d_usize::<64>")]
    n: usize,
    #[serde(default = "d_one")]
    lambda: f64,
    #[serde(default = "d_delta")]
    delta: f64,
    /// 0 selects the suggested constraint count.
    #[serde(default)]
    k: usize,
}

fn d_one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinshiftParams {
    #[serde(default = "d_one")]
    norm_x: f64,
    #[serde(default = "d_minshift_delta")]
    delta: f64,
    #[serde(default = "d_minshift_delta")]
    lambda: f64,
    #[serde(default = "d_usize::<20>")]
    m: usize,
    #[serde(default = "d_u64::<200>")]
    trials: u64,
}

fn d_minshift_delta() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderstatsParams {
    #[serde(default = "d_usize::<1000>")]
    m: usize,
    #[serde(default = "d_one")]
    lambda: f64,
    #[serde(default = "d_usize::<100>")]
    k: usize,
    #[serde(default = "d_u64::<1000>")]
    trials: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DvoretzkyParams {
    #[serde(default = "d_usize::<200>")]
    n: usize,
    /// Half the set size; antipodes are added.
    #[serde(default = "d_usize::<2000>")]
    half: usize,
    #[serde(default = "d_usize::<3>")]
    s: usize,
    #[serde(default = "d_usize::<2000>")]
    directions: usize,
    #[serde(default = "d_u64::<50>")]
    trials: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct B1Params {
    #[serde(default = "d_usize::<40>")]
    n: usize,
    #[serde(default = "d_usize::<64>")]
    count: usize,
    #[serde(default = "d_min_dist")]
    min_dist: f64,
    #[serde(default = "d_b1_delta")]
    delta: f64,
    #[serde(default = "d_usize::<101>")]
    k: usize,
    #[serde(default = "d_u64::<100>")]
    trials: u64,
}

fn d_min_dist() -> f64 {
    1.2
}

fn d_b1_delta() -> f64 {
    0.3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SepProbParams {
    #[serde(default = "d_grid_min")]
    a_min: f64,
    #[serde(default = "d_grid_max")]
    a_max: f64,
    #[serde(default = "d_grid_step")]
    step: f64,
    #[serde(default = "d_lambdas")]
    lambdas: Vec<f64>,
}

fn d_grid_min() -> f64 {
    -3.0
}

fn d_grid_max() -> f64 {
    3.0
}

fn d_grid_step() -> f64 {
    0.1
}

fn d_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

// ---------------------------------------------------------------------------

fn decode_params<P: for<'de> Deserialize<'de>>(config: &Option<RunConfig>) -> anyhow::Result<P> {
    match config {
        Some(cfg) => Ok(cfg.params_as()?),
        None => Ok(serde_json::from_value(serde_json::Value::Object(
            serde_json::Map::new(),
        ))?),
    }
}

fn region_name(region: SeparationRegion) -> &'static str {
    match region {
        SeparationRegion::BothInside => "both-inside",
        SeparationRegion::SameSideOut => "same-side-out",
        SeparationRegion::OppositeOut => "opposite-out",
        SeparationRegion::AOutBIn => "a-out-b-in",
        SeparationRegion::BOutAIn => "b-out-a-in",
        SeparationRegion::ANegoutBIn => "a-negout-b-in",
        SeparationRegion::BNegoutAIn => "b-negout-a-in",
    }
}

fn sampled_ball_set(seed: u64, n: usize, count: usize) -> anyhow::Result<PointSet> {
    let mut s = derive_stream(seed, "points");
    let points = htsk_experiments::sets::ball_points(&mut s, n, count, 1.0)?;
    Ok(PointSet::new(points)?)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();

    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }

    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading configuration {}", path.display()))?;
            let cfg = RunConfig::from_json(&text)?;
            if cfg.experiment != cli.command.label() {
                bail!(
                    "configuration selects experiment '{}' but '{}' was invoked",
                    cfg.experiment,
                    cli.command.label()
                );
            }
            Some(cfg)
        }
        None => None,
    };
    let constants = config.as_ref().map(|c| c.constants).unwrap_or(Constants {
        c0: 0.7,
        c1: 2.0,
        c2: 5.0,
    });
    let widths = config.as_ref().map(|c| c.widths).unwrap_or_default();

    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    let format: ReportFormat = cli.format.into();
    let out_path = |label: &str| {
        cli.out
            .join(format!("{label}-{}.{}", cli.seed, format.extension()))
    };

    match &cli.command {
        Command::Plan => {
            let p: SetParams = decode_params(&config)?;
            let t = sampled_ball_set(cli.seed, p.n, p.count)?;
            let stream = derive_stream(cli.seed, "plan");
            let report = plan_with_widths(&t, p.delta, constants, widths, &stream)?;
            let path = out_path("plan");
            emit_report(&report, format, &path)?;
            println!(
                "plan: lambda {:.4}, theta {:.4}, m {} -> {}",
                report.plan.lambda,
                report.plan.theta,
                report.plan.m,
                path.display()
            );
        }
        Command::Embed => {
            let p: SetParams = decode_params(&config)?;
            let t = sampled_ball_set(cli.seed, p.n, p.count)?;
            let stream = derive_stream(cli.seed, "embed");
            let planned = plan_with_widths(&t, p.delta, constants, widths, &stream)?;
            let report =
                run_embedding_trial(&t, planned.plan.lambda, planned.plan.m, p.delta, &stream)?;

            // Persist the codes themselves alongside the report.
            let codes = htsk_experiments::encode_instance(
                &t,
                planned.plan.lambda,
                planned.plan.m,
                &stream,
            )?;
            let set = SketchSet::new(
                p.n as u32,
                planned.plan.m as u32,
                planned.plan.lambda,
                cli.seed,
                codes,
            )?;
            let sketch_path = cli.out.join(format!("embed-{}.htsk", cli.seed));
            let mut sink = fs::File::create(&sketch_path)
                .with_context(|| format!("creating {}", sketch_path.display()))?;
            write_sketch_set(&set, &mut sink)?;

            let path = out_path("embed");
            emit_report(&report, format, &path)?;
            println!(
                "embed: m {}, sup distortion {:.4} (target {}), codes -> {}, report -> {}",
                report.m,
                report.sup_distortion,
                p.delta,
                sketch_path.display(),
                path.display()
            );
        }
        Command::Verify => {
            let p: SetParams = decode_params(&config)?;
            let t = sampled_ball_set(cli.seed, p.n, p.count)?;
            let stream = derive_stream(cli.seed, "verify");
            let (plan, report) = run_regularity(&t, p.delta, constants, widths, &stream)?;
            let path = out_path("verify");
            emit_report(&report, format, &path)?;
            println!(
                "verify: m {}, l1 deviation {:.4} (pass {}), spread pass {} -> {}",
                plan.m,
                report.0.l1_deviation,
                report.0.pass_a,
                report.0.pass_bias && report.0.pass_osc,
                path.display()
            );
        }
        Command::Sweep => {
            let mut p: SweepParams = decode_params(&config)?;
            if let Some(t) = cli.trials {
                p.trials = t;
            }
            let t = sampled_ball_set(cli.seed, p.n, p.count)?;
            let curve = run_sweep(&t, p.delta, &p.m_grid, p.trials, constants, cli.seed)?;
            let path = out_path("sweep");
            emit_report(&curve, format, &path)?;
            let best = curve
                .success_rates
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            println!(
                "sweep: {} lengths, best success rate {:.2} -> {}",
                curve.m_values.len(),
                best,
                path.display()
            );
        }
        Command::Counterexample => {
            let mut p: CounterParams = match &config {
                Some(cfg) => cfg.params_as()?,
                None => CounterParams::default(),
            };
            if let Some(t) = cli.trials {
                p.seeds = t;
            }
            let report =
                run_counterexample_comparison(&p.spec, p.seeds, widths.draws, cli.seed)?;
            let path = out_path("counterexample");
            emit_report(&report, format, &path)?;
            println!(
                "counterexample: failure {:.2} at m={} vs {:.2} at m={} (separation {:.2}) -> {}",
                report.rate_low,
                report.m_low,
                report.rate_high,
                report.m_high,
                report.separation,
                path.display()
            );
        }
        Command::Adversary => {
            let p: AdversaryParams = decode_params(&config)?;
            let stream = derive_stream(cli.seed, "adversary");
            let mut ms = stream.child("matrix");
            let a = sample_gaussian_matrix(&mut ms, p.m, p.n)?;
            let mut ds = stream.child("dither");
            let tau = sample_dither(&mut ds, p.m, p.lambda)?;
            let body = Body::Ball { radius: 1.0 };
            let k = if p.k > 0 {
                p.k
            } else {
                // Width of the ball within the delta budget: delta * E‖G‖.
                let local = p.delta * (p.n as f64).sqrt();
                suggest_witness_k(p.m, p.lambda, p.delta, local)
            };
            let report = find_adversarial_pair(&a, &tau, &body, p.delta, k)?;
            let path = out_path("adversary");
            emit_report(&report, format, &path)?;
            if report.found {
                println!(
                    "adversary: witness of norm {:.4} flips {} of {} rows (k={k}) -> {}",
                    report.norm,
                    report.flips,
                    p.m,
                    path.display()
                );
            } else {
                println!(
                    "adversary: no witness (k={k}): {} -> {}",
                    report.diagnostic,
                    path.display()
                );
            }
        }
        Command::Minshift => {
            let mut p: MinshiftParams = decode_params(&config)?;
            if let Some(t) = cli.trials {
                p.trials = t;
            }
            let report =
                run_minimal_shift(p.norm_x, p.delta, p.lambda, p.m, p.trials, cli.seed)?;
            let path = out_path("minshift");
            emit_report(&report, format, &path)?;
            println!(
                "minshift: failure frequency {:.3} over {} trials -> {}",
                report.frequency,
                report.trials,
                path.display()
            );
        }
        Command::Orderstats => {
            let mut p: OrderstatsParams = decode_params(&config)?;
            if let Some(t) = cli.trials {
                p.trials = t;
            }
            let report = run_order_stats(p.m, p.lambda, p.k, p.trials, cli.seed)?;
            let path = out_path("orderstats");
            emit_report(&report, format, &path)?;
            println!(
                "orderstats: envelope frequency {:.3} over {} trials -> {}",
                report.frequency,
                report.trials,
                path.display()
            );
        }
        Command::Dvoretzky => {
            let mut p: DvoretzkyParams = decode_params(&config)?;
            if let Some(t) = cli.trials {
                p.trials = t;
            }
            let mut s = derive_stream(cli.seed, "dv-set");
            let k_set = htsk_experiments::sets::symmetric_sphere_set(&mut s, p.n, p.half)?;
            let stream = derive_stream(cli.seed, "dv");
            let report = run_dvoretzky_containment(
                &k_set,
                p.s,
                p.directions,
                p.trials,
                widths.draws,
                &stream,
            )?;
            let path = out_path("dvoretzky");
            emit_report(&report, format, &path)?;
            println!(
                "dvoretzky: inradius/width in [{:.3}, {:.3}], spectral mismatch {:.4} -> {}",
                report.min_ratio,
                report.max_ratio,
                report.max_spectral_mismatch,
                path.display()
            );
        }
        Command::B1Separate => {
            let mut p: B1Params = decode_params(&config)?;
            if let Some(t) = cli.trials {
                p.trials = t;
            }
            let mut s = derive_stream(cli.seed, "b1-set");
            let points =
                htsk_experiments::sets::separated_sphere_sample(&mut s, p.n, p.count, p.min_dist)?;
            let report = run_b1_separation(&points, p.delta, p.k, p.trials, cli.seed)?;
            let path = out_path("b1-separate");
            emit_report(&report, format, &path)?;
            println!(
                "b1-separate: success frequency {:.3} over {} trials -> {}",
                report.frequency,
                report.trials,
                path.display()
            );
        }
        Command::SepProb => {
            let p: SepProbParams = decode_params(&config)?;
            if !(p.step > 0.0 && p.a_max >= p.a_min) {
                bail!("grid requires step > 0 and a_max >= a_min");
            }
            let steps = ((p.a_max - p.a_min) / p.step).round() as usize;
            let grid: Vec<f64> = (0..=steps).map(|i| p.a_min + i as f64 * p.step).collect();
            let mut rows = Vec::new();
            for &lambda in &p.lambdas {
                for &a in &grid {
                    for &b in &grid {
                        let case = separation_probability(a, b, lambda)?;
                        rows.push((a, b, lambda, case.probability, region_name(case.region)));
                    }
                }
            }
            let table = SeparationTable { rows };
            let path = out_path("sep-prob");
            emit_report(&table, format, &path)?;
            println!(
                "sep-prob: {} grid rows -> {}",
                table.rows.len(),
                path.display()
            );
        }
    }

    Ok(())
}
