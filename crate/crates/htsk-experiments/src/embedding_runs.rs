//! Forward-direction experiments: plan parameters for a point set, sketch
//! it, measure worst-pair distortion, and sweep the sketch length to find
//! where the distortion target starts holding.

use rayon::prelude::*;

use htsk::embedding::{encode, estimate_distance, SketchCode};
use htsk::geomlib::{
    check_well_spread, difference_points, greedy_net, local_difference_width, plan_parameters,
    PointSet, TessellationPlan,
};
use htsk::randkit::{derive_stream, sample_dither, sample_gaussian_matrix, StreamHandle};
use htsk::{Error, Result};

use crate::config::{Constants, Widths};
use crate::report::{DistortionReport, PlanReport, RegularityReportWrap, SweepCurve};

/// Two-stage planning: a width-free plan fixes `theta` and `lambda`, the
/// net and the local difference width are measured at that `theta`, and
/// the final plan turns those measurements into a sketch length.
pub fn plan_with_widths(
    t: &PointSet,
    delta: f64,
    constants: Constants,
    widths: Widths,
    stream: &StreamHandle,
) -> Result<PlanReport> {
    let consts = (constants.c0, constants.c1, constants.c2);
    let scales = plan_parameters(t, delta, consts, (0.0, 0.0))?;
    let net = greedy_net(t, scales.theta)?;
    let log_cover = (net.net_indices.len() as f64).ln();
    let local = local_difference_width(t, scales.theta, widths.draws, &stream.child("widths"))?;
    let plan = plan_parameters(t, delta, consts, (log_cover, local.mean))?;
    Ok(PlanReport {
        plan,
        log_cover,
        local_width: local.mean,
    })
}

/// Encodes every point of `t` under one `(A, tau)` drawn from `stream`'s
/// children `"matrix"` and `"dither"`.
pub fn encode_instance(
    t: &PointSet,
    lambda: f64,
    m: usize,
    stream: &StreamHandle,
) -> Result<Vec<SketchCode>> {
    let mut ms = stream.child("matrix");
    let a = sample_gaussian_matrix(&mut ms, m, t.n())?;
    let mut ds = stream.child("dither");
    let tau = sample_dither(&mut ds, m, lambda)?;
    t.points()
        .par_iter()
        .map(|p| encode(&a, &tau, p))
        .collect()
}

/// Sketches `t` once and reports the worst pairwise deviation between the
/// scaled Hamming distance and the Euclidean distance, over all unordered
/// pairs including `x = y`. Deviations are also binned at width
/// `delta / 10`.
pub fn run_embedding_trial(
    t: &PointSet,
    lambda: f64,
    m: usize,
    delta: f64,
    stream: &StreamHandle,
) -> Result<DistortionReport> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let codes = encode_instance(t, lambda, m, stream)?;
    let pts = t.points();
    let bin_width = delta / 10.0;

    struct PairScan {
        sup: f64,
        witness: (usize, usize),
        histogram: Vec<u64>,
        pairs: u64,
    }

    let identity = || PairScan {
        sup: -1.0,
        witness: (0, 0),
        histogram: Vec::new(),
        pairs: 0,
    };
    let merge = |mut x: PairScan, y: PairScan| {
        // Ties keep the lexicographically smallest pair so the winner does
        // not depend on the merge order.
        if y.sup > x.sup || (y.sup == x.sup && y.witness < x.witness) {
            x.sup = y.sup;
            x.witness = y.witness;
        }
        if x.histogram.len() < y.histogram.len() {
            x.histogram.resize(y.histogram.len(), 0);
        }
        for (dst, src) in x.histogram.iter_mut().zip(&y.histogram) {
            *dst += src;
        }
        x.pairs += y.pairs;
        x
    };

    let scan = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut local = identity();
            for j in i..pts.len() {
                let est = estimate_distance(&codes[i], &codes[j], lambda, m)?.estimate;
                let truth = euclid(&pts[i], &pts[j]);
                let dev = (est - truth).abs();
                if dev > local.sup || (dev == local.sup && (i, j) < local.witness) {
                    local.sup = dev;
                    local.witness = (i, j);
                }
                let bin = (dev / bin_width).floor() as usize;
                if local.histogram.len() <= bin {
                    local.histogram.resize(bin + 1, 0);
                }
                local.histogram[bin] += 1;
                local.pairs += 1;
            }
            Ok::<_, Error>(local)
        })
        .try_reduce(identity, |a, b| Ok(merge(a, b)))?;

    Ok(DistortionReport {
        delta,
        lambda,
        m,
        sup_distortion: scan.sup.max(0.0),
        witness_pair: scan.witness,
        pair_count: scan.pairs,
        bin_width,
        histogram: scan.histogram,
    })
}

/// Success rate of `|scaled Hamming - Euclidean| <= delta` over all pairs,
/// as a function of the sketch length. `lambda` comes from the planner and
/// is held fixed while `m` runs over `m_grid`. Trials are seeded by the
/// value of `m` and the trial index, so a duplicated grid entry reproduces
/// the same rate exactly.
pub fn run_sweep(
    t: &PointSet,
    delta: f64,
    m_grid: &[usize],
    trials: u64,
    constants: Constants,
    root_seed: u64,
) -> Result<SweepCurve> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".to_string()));
    }
    let consts = (constants.c0, constants.c1, constants.c2);
    let lambda = plan_parameters(t, delta, consts, (0.0, 0.0))?.lambda;
    let mut rates = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "sketch lengths in the sweep grid must be positive".to_string(),
            ));
        }
        let successes: u64 = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let stream = derive_stream(root_seed, &format!("sweep/m{m}/t{trial}"));
                let report = run_embedding_trial(t, lambda, m, delta, &stream)?;
                Ok::<_, Error>(u64::from(report.sup_distortion <= delta))
            })
            .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
        rates.push(successes as f64 / trials as f64);
    }
    Ok(SweepCurve {
        delta,
        trials,
        m_values: m_grid.to_vec(),
        success_rates: rates,
    })
}

/// Plans an instance for `t`, samples it, and runs both regularity checks:
/// the scaled ℓ1 distances of net pairs against their Euclidean distances,
/// and the partial-norm spread conditions on net points and local
/// differences.
pub fn run_regularity(
    t: &PointSet,
    delta: f64,
    constants: Constants,
    widths: Widths,
    stream: &StreamHandle,
) -> Result<(TessellationPlan, RegularityReportWrap)> {
    let planned = plan_with_widths(t, delta, constants, widths, stream)?;
    let plan = planned.plan;
    let mut ms = stream.child("matrix");
    let a = sample_gaussian_matrix(&mut ms, plan.m, t.n())?;
    let net = greedy_net(t, plan.theta)?;
    let net_points: Vec<Vec<f64>> = net
        .net_indices
        .iter()
        .map(|&i| t.points()[i].clone())
        .collect();
    let diffs = difference_points(t, plan.theta);
    let report = check_well_spread(&a, &net_points, &diffs, delta, plan.lambda)?;
    Ok((plan, RegularityReportWrap(report)))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
