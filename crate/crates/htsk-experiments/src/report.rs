//! Report types produced by the experiment runners, plus deterministic
//! JSON/CSV emitters. Field order is fixed by the emitters (never by a
//! hash map), and every float is rendered with 17 significant digits so
//! the printed value parses back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use htsk::geomlib::{RegularityReport, TessellationPlan};
use htsk::{Error, Result};

/// Output encoding for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

/// A finished experiment result that can be serialized.
pub trait Report {
    /// Stable experiment label; used for output file names.
    fn label(&self) -> &'static str;
    fn to_json(&self) -> String;
    fn to_csv(&self) -> String;

    fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

/// Writes a rendered report to `path`, naming the path in any error.
pub fn emit_report(report: &dyn Report, format: ReportFormat, path: &Path) -> Result<()> {
    let body = report.render(format);
    fs::write(path, body.as_bytes()).map_err(|e| {
        Error::InvalidArgument(format!("failed to write report to {}: {e}", path.display()))
    })
}

/// 17-significant-digit rendering; parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // Reports only ever carry finite values; keep the output parseable
        // if one slips through.
        "null".to_string()
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// Deterministic-order JSON object builder.
#[derive(Default)]
pub struct JsonObject {
    parts: Vec<String>,
}

impl JsonObject {
    pub fn new() -> Self {
        JsonObject::default()
    }

    pub fn f64(mut self, key: &str, value: f64) -> Self {
        self.parts.push(format!("\"{key}\": {}", fmt_f64(value)));
        self
    }

    pub fn u64(mut self, key: &str, value: u64) -> Self {
        self.parts.push(format!("\"{key}\": {value}"));
        self
    }

    pub fn bool(mut self, key: &str, value: bool) -> Self {
        self.parts.push(format!("\"{key}\": {value}"));
        self
    }

    pub fn str(mut self, key: &str, value: &str) -> Self {
        self.parts
            .push(format!("\"{key}\": \"{}\"", json_escape(value)));
        self
    }

    pub fn f64_list(mut self, key: &str, values: &[f64]) -> Self {
        let body: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.parts
            .push(format!("\"{key}\": [{}]", body.join(", ")));
        self
    }

    pub fn u64_list(mut self, key: &str, values: &[u64]) -> Self {
        let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.parts
            .push(format!("\"{key}\": [{}]", body.join(", ")));
        self
    }

    pub fn usize_list(mut self, key: &str, values: &[usize]) -> Self {
        let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.parts
            .push(format!("\"{key}\": [{}]", body.join(", ")));
        self
    }

    pub fn raw(mut self, key: &str, value: String) -> Self {
        self.parts.push(format!("\"{key}\": {value}"));
        self
    }

    pub fn finish(self) -> String {
        format!("{{{}}}", self.parts.join(", "))
    }
}

/// CSV rows with a mandatory header.
pub struct CsvTable {
    out: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            out: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(
            cells.len(),
            self.columns,
            "csv row width must match the header"
        );
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

// ---------------------------------------------------------------------------
// Concrete reports
// ---------------------------------------------------------------------------

/// Worst-pair distortion of one embedding trial, with a histogram of all
/// pairwise deviations at bin width `delta / 10`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub delta: f64,
    pub lambda: f64,
    pub m: usize,
    pub sup_distortion: f64,
    pub witness_pair: (usize, usize),
    pub pair_count: u64,
    pub bin_width: f64,
    pub histogram: Vec<u64>,
}

impl Report for DistortionReport {
    fn label(&self) -> &'static str {
        "embed"
    }

    fn to_json(&self) -> String {
        JsonObject::new()
            .f64("delta", self.delta)
            .f64("lambda", self.lambda)
            .u64("m", self.m as u64)
            .f64("sup_distortion", self.sup_distortion)
            .usize_list(
                "witness_pair",
                &[self.witness_pair.0, self.witness_pair.1],
            )
            .u64("pair_count", self.pair_count)
            .f64("bin_width", self.bin_width)
            .u64_list("histogram", &self.histogram)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[
            "sup_distortion",
            "witness_i",
            "witness_j",
            "pair_count",
            "bin_width",
            "bin_index",
            "bin_count",
        ]);
        for (idx, &count) in self.histogram.iter().enumerate() {
            t.row(&[
                fmt_f64(self.sup_distortion),
                self.witness_pair.0.to_string(),
                self.witness_pair.1.to_string(),
                self.pair_count.to_string(),
                fmt_f64(self.bin_width),
                idx.to_string(),
                count.to_string(),
            ]);
        }
        t.finish()
    }
}

/// Success rate as a function of the sketch length.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub delta: f64,
    pub trials: u64,
    pub m_values: Vec<usize>,
    pub success_rates: Vec<f64>,
}

impl Report for SweepCurve {
    fn label(&self) -> &'static str {
        "sweep"
    }

    fn to_json(&self) -> String {
        JsonObject::new()
            .f64("delta", self.delta)
            .u64("trials", self.trials)
            .usize_list("m_values", &self.m_values)
            .f64_list("success_rates", &self.success_rates)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["m", "success_rate", "trials", "delta"]);
        for (&m, &rate) in self.m_values.iter().zip(&self.success_rates) {
            t.row(&[
                m.to_string(),
                fmt_f64(rate),
                self.trials.to_string(),
                fmt_f64(self.delta),
            ]);
        }
        t.finish()
    }
}

/// Outcome of the adversarial-witness search.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessResult {
    pub found: bool,
    pub t_star: Option<Vec<f64>>,
    pub norm: f64,
    pub flips: u64,
    pub i_used: Vec<usize>,
    pub diagnostic: String,
}

impl Report for WitnessResult {
    fn label(&self) -> &'static str {
        "adversary"
    }

    fn to_json(&self) -> String {
        let mut obj = JsonObject::new().bool("found", self.found);
        obj = match &self.t_star {
            Some(t) => obj.f64_list("t_star", t),
            None => obj.raw("t_star", "null".to_string()),
        };
        obj.f64("norm", self.norm)
            .u64("flips", self.flips)
            .usize_list("i_used", &self.i_used)
            .str("diagnostic", &self.diagnostic)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["found", "norm", "flips", "constraints", "diagnostic"]);
        t.row(&[
            self.found.to_string(),
            fmt_f64(self.norm),
            self.flips.to_string(),
            self.i_used.len().to_string(),
            self.diagnostic.replace(',', ";"),
        ]);
        t.finish()
    }
}

/// Failure rates at a short and a long sketch on the same point set.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub delta: f64,
    pub lambda: f64,
    pub body_width: f64,
    pub local_width: f64,
    pub m_low: usize,
    pub m_high: usize,
    pub seeds: u64,
    pub rate_low: f64,
    pub rate_high: f64,
    pub separation: f64,
    pub scan_failures_low: u64,
    pub witness_failures_low: u64,
    pub scan_failures_high: u64,
    pub witness_failures_high: u64,
}

impl Report for ComparisonReport {
    fn label(&self) -> &'static str {
        "counterexample"
    }

    fn to_json(&self) -> String {
        JsonObject::new()
            .f64("delta", self.delta)
            .f64("lambda", self.lambda)
            .f64("body_width", self.body_width)
            .f64("local_width", self.local_width)
            .u64("m_low", self.m_low as u64)
            .u64("m_high", self.m_high as u64)
            .u64("seeds", self.seeds)
            .f64("rate_low", self.rate_low)
            .f64("rate_high", self.rate_high)
            .f64("separation", self.separation)
            .u64("scan_failures_low", self.scan_failures_low)
            .u64("witness_failures_low", self.witness_failures_low)
            .u64("scan_failures_high", self.scan_failures_high)
            .u64("witness_failures_high", self.witness_failures_high)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[
            "m", "failure_rate", "scan_failures", "witness_failures", "seeds", "delta", "lambda",
        ]);
        t.row(&[
            self.m_low.to_string(),
            fmt_f64(self.rate_low),
            self.scan_failures_low.to_string(),
            self.witness_failures_low.to_string(),
            self.seeds.to_string(),
            fmt_f64(self.delta),
            fmt_f64(self.lambda),
        ]);
        t.row(&[
            self.m_high.to_string(),
            fmt_f64(self.rate_high),
            self.scan_failures_high.to_string(),
            self.witness_failures_high.to_string(),
            self.seeds.to_string(),
            fmt_f64(self.delta),
            fmt_f64(self.lambda),
        ]);
        t.finish()
    }
}

/// Per-trial inradius statistics for the random-projection containment
/// experiment, plus the cross-check against the spectral oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub s: usize,
    pub direction_count: usize,
    pub trials: u64,
    pub width_mean: f64,
    pub hull_inradii: Vec<f64>,
    pub ellipsoid_inradii: Vec<f64>,
    pub sigma_mins: Vec<f64>,
    pub max_spectral_mismatch: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl Report for ContainmentReport {
    fn label(&self) -> &'static str {
        "dvoretzky"
    }

    fn to_json(&self) -> String {
        JsonObject::new()
            .u64("s", self.s as u64)
            .u64("direction_count", self.direction_count as u64)
            .u64("trials", self.trials)
            .f64("width_mean", self.width_mean)
            .f64_list("hull_inradii", &self.hull_inradii)
            .f64_list("ellipsoid_inradii", &self.ellipsoid_inradii)
            .f64_list("sigma_mins", &self.sigma_mins)
            .f64("max_spectral_mismatch", self.max_spectral_mismatch)
            .f64("min_ratio", self.min_ratio)
            .f64("max_ratio", self.max_ratio)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[
            "trial",
            "hull_inradius",
            "ellipsoid_inradius",
            "sigma_min",
            "ratio",
        ]);
        for i in 0..self.hull_inradii.len() {
            t.row(&[
                i.to_string(),
                fmt_f64(self.hull_inradii[i]),
                fmt_f64(self.ellipsoid_inradii[i]),
                fmt_f64(self.sigma_mins[i]),
                fmt_f64(self.hull_inradii[i] / self.width_mean),
            ]);
        }
        t.finish()
    }
}

/// Frequency of a per-trial event, with the defining parameters listed in
/// a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyReport {
    pub label: &'static str,
    pub event: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub trials: u64,
    pub hits: u64,
    pub frequency: f64,
}

impl Report for FrequencyReport {
    fn label(&self) -> &'static str {
        self.label
    }

    fn to_json(&self) -> String {
        let mut params = JsonObject::new();
        for (k, v) in &self.params {
            params = params.f64(k, *v);
        }
        JsonObject::new()
            .str("event", self.event)
            .raw("params", params.finish())
            .u64("trials", self.trials)
            .u64("hits", self.hits)
            .f64("frequency", self.frequency)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut header: Vec<&str> = vec!["event"];
        header.extend(self.params.iter().map(|(k, _)| *k));
        header.extend(["trials", "hits", "frequency"]);
        let mut t = CsvTable::new(&header);
        let mut cells = vec![self.event.to_string()];
        cells.extend(self.params.iter().map(|(_, v)| fmt_f64(*v)));
        cells.push(self.trials.to_string());
        cells.push(self.hits.to_string());
        cells.push(fmt_f64(self.frequency));
        t.row(&cells);
        t.finish()
    }
}

/// Planner output together with the measured widths it consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub plan: TessellationPlan,
    pub log_cover: f64,
    pub local_width: f64,
}

impl Report for PlanReport {
    fn label(&self) -> &'static str {
        "plan"
    }

    fn to_json(&self) -> String {
        JsonObject::new()
            .f64("delta", self.plan.delta)
            .f64("theta", self.plan.theta)
            .f64("lambda", self.plan.lambda)
            .u64("m", self.plan.m as u64)
            .f64("kappa", self.plan.kappa)
            .f64("c0", self.plan.c0)
            .f64("c1", self.plan.c1)
            .f64("c2", self.plan.c2)
            .f64("log_cover", self.log_cover)
            .f64("local_width", self.local_width)
            .finish()
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[
            "delta",
            "theta",
            "lambda",
            "m",
            "kappa",
            "c0",
            "c1",
            "c2",
            "log_cover",
            "local_width",
        ]);
        t.row(&[
            fmt_f64(self.plan.delta),
            fmt_f64(self.plan.theta),
            fmt_f64(self.plan.lambda),
            self.plan.m.to_string(),
            fmt_f64(self.plan.kappa),
            fmt_f64(self.plan.c0),
            fmt_f64(self.plan.c1),
            fmt_f64(self.plan.c2),
            fmt_f64(self.log_cover),
            fmt_f64(self.local_width),
        ]);
        t.finish()
    }
}

/// Regularity-check outcome (scaling calibration and spread of a sampled
/// sign pattern).
#[derive(Debug, Clone)]
pub struct RegularityReportWrap(pub RegularityReport);

impl Report for RegularityReportWrap {
    fn label(&self) -> &'static str {
        "verify"
    }

    fn to_json(&self) -> String {
        let r = &self.0;
        JsonObject::new()
            .f64("kappa", r.kappa)
            .f64("l1_deviation", r.l1_deviation)
            .u64("s", r.s as u64)
            .f64("bias_knorm", r.bias_knorm)
            .f64("osc_knorm", r.osc_knorm)
            .bool("pass_a", r.pass_a)
            .bool("pass_bias", r.pass_bias)
            .bool("pass_osc", r.pass_osc)
            .finish()
    }

    fn to_csv(&self) -> String {
        let r = &self.0;
        let mut t = CsvTable::new(&[
            "kappa",
            "l1_deviation",
            "s",
            "bias_knorm",
            "osc_knorm",
            "pass_a",
            "pass_bias",
            "pass_osc",
        ]);
        t.row(&[
            fmt_f64(r.kappa),
            fmt_f64(r.l1_deviation),
            r.s.to_string(),
            fmt_f64(r.bias_knorm),
            fmt_f64(r.osc_knorm),
            r.pass_a.to_string(),
            r.pass_bias.to_string(),
            r.pass_osc.to_string(),
        ]);
        t.finish()
    }
}

/// Exact single-row sign-disagreement probabilities over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationTable {
    /// Rows of (a, b, lambda, probability, region name).
    pub rows: Vec<(f64, f64, f64, f64, &'static str)>,
}

impl Report for SeparationTable {
    fn label(&self) -> &'static str {
        "sep-prob"
    }

    fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|(a, b, lambda, p, region)| {
                JsonObject::new()
                    .f64("a", *a)
                    .f64("b", *b)
                    .f64("lambda", *lambda)
                    .f64("probability", *p)
                    .str("region", region)
                    .finish()
            })
            .collect();
        format!("{{\"rows\": [{}]}}", rows.join(", "))
    }

    fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["a", "b", "lambda", "probability", "region"]);
        for (a, b, lambda, p, region) in &self.rows {
            t.row(&[
                fmt_f64(*a),
                fmt_f64(*b),
                fmt_f64(*lambda),
                fmt_f64(*p),
                region.to_string(),
            ]);
        }
        t.finish()
    }
}
