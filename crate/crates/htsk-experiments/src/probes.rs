//! Small probability probes: the minimal-shift lower bound (an undersized
//! dither misses a 2-delta shift almost always), the linear envelope on
//! dither order statistics, and separation of a point set by random
//! one-bit projections.

use rayon::prelude::*;

use htsk::embedding::{encode, estimate_distance};
use htsk::randkit::{derive_stream, sample_dither, sample_gaussian_matrix, sample_sphere};
use htsk::{Error, Result};

use crate::report::FrequencyReport;
use crate::sets;

/// Frequency of `|estimate - 2 delta| > delta` for the colinear pair
/// `x = norm_x * e1`, `y = (1 - 2 delta / norm_x) x`, whose true distance
/// is exactly `2 delta`. With a dither half-width as small as `lambda`,
/// almost every row of the sketch is blind to the shift, so the estimate
/// collapses toward 0 and the trial fails. The shift lives on a single
/// axis, so the ambient dimension is 1 without loss of generality.
pub fn run_minimal_shift(
    norm_x: f64,
    delta: f64,
    lambda: f64,
    m: usize,
    trials: u64,
    root_seed: u64,
) -> Result<FrequencyReport> {
    if !(delta.is_finite() && delta > 0.0 && delta < 0.25) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1/4), got {delta}"
        )));
    }
    if !(norm_x.is_finite() && norm_x >= 4.0 * delta) {
        return Err(Error::InvalidArgument(format!(
            "norm_x = {norm_x} must be at least 4*delta = {}; the shifted point must stay on \
             the same side of the origin",
            4.0 * delta
        )));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if m == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "m and trials must be positive".to_string(),
        ));
    }

    let x = [norm_x];
    let y = [norm_x - 2.0 * delta];
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let stream = derive_stream(root_seed, &format!("minshift/t{trial}"));
            let mut ms = stream.child("matrix");
            let a = sample_gaussian_matrix(&mut ms, m, 1)?;
            let mut ds = stream.child("dither");
            let tau = sample_dither(&mut ds, m, lambda)?;
            let cx = encode(&a, &tau, &x)?;
            let cy = encode(&a, &tau, &y)?;
            let est = estimate_distance(&cx, &cy, lambda, m)?.estimate;
            Ok::<_, Error>(u64::from((est - 2.0 * delta).abs() > delta))
        })
        .try_reduce(|| 0u64, |p, q| Ok(p + q))?;

    Ok(FrequencyReport {
        label: "minshift",
        event: "estimate_misses_the_shift_by_more_than_delta",
        params: vec![
            ("norm_x", norm_x),
            ("delta", delta),
            ("lambda", lambda),
            ("m", m as f64),
        ],
        trials,
        hits: failures,
        frequency: failures as f64 / trials as f64,
    })
}

/// Frequency with which the sorted dither magnitudes stay under the linear
/// envelope `|tau|_(i) <= 2 i lambda / m` for every `i` between
/// `ceil(k/2)` and `k` (1-indexed). Requires `k <= m/2`.
pub fn run_order_stats(
    m: usize,
    lambda: f64,
    k: usize,
    trials: u64,
    root_seed: u64,
) -> Result<FrequencyReport> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if k == 0 || k > m / 2 {
        return Err(Error::InvalidArgument(format!(
            "order count k={k} must lie in [1, m/2] = [1, {}]",
            m / 2
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".to_string()));
    }

    let lo = k.div_ceil(2);
    let holds: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = derive_stream(root_seed, &format!("orderstats/t{trial}"));
            let tau = sample_dither(&mut s, m, lambda)?;
            let mut mags: Vec<f64> = tau.values().iter().map(|v| v.abs()).collect();
            mags.sort_by(f64::total_cmp);
            let ok = (lo..=k).all(|i| mags[i - 1] <= 2.0 * i as f64 * lambda / m as f64);
            Ok::<_, Error>(u64::from(ok))
        })
        .try_reduce(|| 0u64, |p, q| Ok(p + q))?;

    Ok(FrequencyReport {
        label: "orderstats",
        event: "sorted_dithers_within_linear_envelope",
        params: vec![
            ("m", m as f64),
            ("lambda", lambda),
            ("k", k as f64),
        ],
        trials,
        hits: holds,
        frequency: holds as f64 / trials as f64,
    })
}

/// Frequency with which `k` uniform sphere directions `delta`-separate
/// every pair of `t_points`: for each pair `(t1, t2)` some direction `X`
/// has `|<X, t1 - t2>| >= delta`. The points must be unit vectors, pairwise
/// at least 1/2 apart.
pub fn run_b1_separation(
    t_points: &[Vec<f64>],
    delta: f64,
    k: usize,
    trials: u64,
    root_seed: u64,
) -> Result<FrequencyReport> {
    if t_points.is_empty() {
        return Err(Error::InvalidArgument("the point set is empty".to_string()));
    }
    let n = t_points[0].len();
    for (idx, p) in t_points.iter().enumerate() {
        if p.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "point {idx} has dimension {}, expected {n}",
                p.len()
            )));
        }
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "point {idx} has norm {norm}; separation directions are calibrated for unit \
                 vectors"
            )));
        }
    }
    for i in 0..t_points.len() {
        for j in (i + 1)..t_points.len() {
            let d = sets::dist(&t_points[i], &t_points[j]);
            if d < 0.5 {
                return Err(Error::InvalidArgument(format!(
                    "points {i} and {j} are only {d} apart; the set must be 1/2-separated"
                )));
            }
        }
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    if k == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "k and trials must be positive".to_string(),
        ));
    }

    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = derive_stream(root_seed, &format!("b1/t{trial}"));
            let dirs: Result<Vec<Vec<f64>>> =
                (0..k).map(|_| sample_sphere(&mut s, n)).collect();
            let dirs = dirs?;
            let mut all_pairs = true;
            'pairs: for i in 0..t_points.len() {
                for j in (i + 1)..t_points.len() {
                    let z: Vec<f64> = t_points[i]
                        .iter()
                        .zip(&t_points[j])
                        .map(|(a, b)| a - b)
                        .collect();
                    let separated = dirs
                        .iter()
                        .any(|x| htsk::randkit::dot(x, &z).abs() >= delta);
                    if !separated {
                        all_pairs = false;
                        break 'pairs;
                    }
                }
            }
            Ok::<_, Error>(u64::from(all_pairs))
        })
        .try_reduce(|| 0u64, |p, q| Ok(p + q))?;

    Ok(FrequencyReport {
        label: "b1-separate",
        event: "every_pair_delta_separated_by_some_direction",
        params: vec![
            ("delta", delta),
            ("k", k as f64),
            ("count", t_points.len() as f64),
        ],
        trials,
        hits: successes,
        frequency: successes as f64 / trials as f64,
    })
}
