//! The two-block product body used to separate the sketch-length regimes:
//! a unit ball on a few coordinates times a small ball on many. Its
//! gaussian width is dominated by the thin high-dimensional block, so a
//! sketch length chosen by width alone (without the `1/delta^3` local
//! term) reliably misreports some pair of its points, while the longer
//! planned length does not.

use rayon::prelude::*;

use htsk::embedding::{encode, estimate_distance, SketchCode};
use htsk::geomlib::{PointSet, WidthEstimate};
use htsk::randkit::{derive_stream, sample_dither, sample_gaussian_matrix, StreamHandle};
use htsk::{Error, Result};

use crate::report::ComparisonReport;
use crate::sets;
use crate::witness::{find_adversarial_pair, suggest_witness_k, Body};

/// Parameters of the product body `B^r x epsilon B^(n-r)` with
/// `n = floor(eta * r / epsilon^2)`, plus how many points to sample from
/// each part when scanning for misreported pairs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    pub r: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    /// Unit-sphere samples supported on the first block.
    #[serde(default = "default_block_count")]
    pub i_sphere: usize,
    /// Unit-ball samples supported on the first block.
    #[serde(default = "default_half_count")]
    pub i_ball: usize,
    /// `epsilon`-sphere samples supported on the second block.
    #[serde(default = "default_block_count")]
    pub j_sphere: usize,
    /// Products of a first-block sphere sample and a second-block
    /// `epsilon`-sphere sample.
    #[serde(default = "default_block_count")]
    pub products: usize,
}

fn default_block_count() -> usize {
    32
}

fn default_half_count() -> usize {
    16
}

impl CounterexampleSpec {
    /// Ambient dimension `floor(eta * r / epsilon^2)`.
    pub fn n(&self) -> usize {
        // Decimal parameters (e.g. epsilon = 0.04) square to values a few
        // ulps above the exact decimal, pushing exact-integer quotients
        // just below the integer; nudge before flooring.
        let q = self.eta * self.r as f64 / (self.epsilon * self.epsilon);
        (q * (1.0 + 1e-12)).floor() as usize
    }

    /// Second-block dimension.
    pub fn j_len(&self) -> usize {
        self.n() - self.r
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidArgument("r must be at least 1".to_string()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive and finite, got {}",
                self.delta
            )));
        }
        if self.epsilon >= self.delta / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {} must be below delta/2 = {}; the thin block must sit inside the \
                 distortion target",
                self.epsilon,
                self.delta / 2.0
            )));
        }
        if self.n() < self.r + 1 {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension floor(eta*r/epsilon^2) = {} leaves no second block beyond \
                 r = {}",
                self.n(),
                self.r
            )));
        }
        Ok(())
    }

    pub fn body(&self) -> Body {
        Body::TwoBlock {
            r: self.r,
            epsilon: self.epsilon,
        }
    }
}

/// Samples the scan set: the origin, sphere and ball points on the first
/// block, `epsilon`-sphere points on the second, and products of the two.
/// Every point lies in the body, so the set radius is at most
/// `sqrt(1 + epsilon^2)`.
pub fn build_counterexample_set(
    spec: &CounterexampleSpec,
    stream: &StreamHandle,
) -> Result<PointSet> {
    spec.validate()?;
    let n = spec.n();
    let r = spec.r;
    let j = spec.j_len();
    let mut s = stream.child("body-sample");
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; n]];

    let embed_i = |head: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; n];
        p[..r].copy_from_slice(head);
        p
    };
    let embed_j = |tail: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; n];
        p[r..].copy_from_slice(tail);
        p
    };

    for head in sets::sphere_points(&mut s, r, spec.i_sphere, 1.0)? {
        points.push(embed_i(&head));
    }
    for head in sets::ball_points(&mut s, r, spec.i_ball, 1.0)? {
        points.push(embed_i(&head));
    }
    for tail in sets::sphere_points(&mut s, j, spec.j_sphere, spec.epsilon)? {
        points.push(embed_j(&tail));
    }
    for _ in 0..spec.products {
        let head = sets::sphere_points(&mut s, r, 1, 1.0)?.pop().expect("one point");
        let tail = sets::sphere_points(&mut s, j, 1, spec.epsilon)?.pop().expect("one point");
        let mut p = vec![0.0; n];
        p[..r].copy_from_slice(&head);
        p[r..].copy_from_slice(&tail);
        points.push(p);
    }

    let body = spec.body();
    for p in &points {
        debug_assert!(body.contains(p), "sampled point escaped the body");
    }
    PointSet::new(points)
}

/// Gaussian width of the product body. For each gaussian draw the exact
/// supremum over the body is `‖G_I‖ + epsilon * ‖G_J‖` (the two blocks
/// maximize independently), so only the draws are Monte Carlo.
pub fn body_width(
    spec: &CounterexampleSpec,
    draws: usize,
    stream: &StreamHandle,
) -> Result<WidthEstimate> {
    spec.validate()?;
    if draws == 0 {
        return Err(Error::InvalidArgument("width draws must be positive".to_string()));
    }
    let sup = |gi: f64, gj: f64| gi + spec.epsilon * gj;
    block_width_mc(spec, draws, stream, sup)
}

/// Gaussian width of the body intersected with the `delta`-ball. The
/// per-draw supremum maximizes `‖G_I‖ u + ‖G_J‖ v` over
/// `u^2 + v^2 <= delta^2`, `v <= epsilon` (the first-block cap of 1 is
/// slack because `delta < 1`), which is attained at
/// `v = min(epsilon, delta ‖G_J‖ / sqrt(‖G_I‖^2 + ‖G_J‖^2))`.
pub fn local_body_width(
    spec: &CounterexampleSpec,
    draws: usize,
    stream: &StreamHandle,
) -> Result<WidthEstimate> {
    spec.validate()?;
    if draws == 0 {
        return Err(Error::InvalidArgument("width draws must be positive".to_string()));
    }
    if spec.delta >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "the localized width formula assumes delta < 1, got {}",
            spec.delta
        )));
    }
    let delta = spec.delta;
    let eps = spec.epsilon;
    let sup = move |gi: f64, gj: f64| {
        let denom = (gi * gi + gj * gj).sqrt();
        let v = if denom > 0.0 {
            (delta * gj / denom).min(eps)
        } else {
            0.0
        };
        let u = (delta * delta - v * v).max(0.0).sqrt();
        gi * u + gj * v
    };
    block_width_mc(spec, draws, stream, sup)
}

fn block_width_mc(
    spec: &CounterexampleSpec,
    draws: usize,
    stream: &StreamHandle,
    sup: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<WidthEstimate> {
    let n = spec.n();
    let r = spec.r;
    // One independent child per draw keeps the estimate identical no
    // matter how the loop is scheduled.
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut s = stream.child(&format!("draw/{d}"));
            let mut g = vec![0.0; n];
            s.fill_gaussians(&mut g);
            let gi = g[..r].iter().map(|v| v * v).sum::<f64>().sqrt();
            let gj = g[r..].iter().map(|v| v * v).sum::<f64>().sqrt();
            sup(gi, gj)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / draws as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / draws as f64;
    Ok(WidthEstimate {
        mean,
        std_error: (var / draws as f64).sqrt(),
        draws,
    })
}

/// One seed of the comparison: sketch the scan set at length `m`, look for
/// a pair whose estimate is off by at least `2 delta`, and if the scan is
/// clean let the witness construction try to exhibit one against the
/// origin. Returns (failed, scan_found, witness_found).
#[allow(clippy::too_many_arguments)]
fn one_failure_check(
    spec: &CounterexampleSpec,
    t: &PointSet,
    dists: &[Vec<f64>],
    lambda: f64,
    m: usize,
    k_base: usize,
    root_seed: u64,
    seed_index: u64,
) -> Result<(bool, bool, bool)> {
    let stream = derive_stream(root_seed, &format!("counter/m{m}/s{seed_index}"));
    let mut ms = stream.child("matrix");
    let a = sample_gaussian_matrix(&mut ms, m, t.n())?;
    let mut ds = stream.child("dither");
    let tau = sample_dither(&mut ds, m, lambda)?;
    let codes: Vec<SketchCode> = t
        .points()
        .par_iter()
        .map(|p| encode(&a, &tau, p))
        .collect::<Result<_>>()?;

    let threshold = 2.0 * spec.delta;
    let scan_found = (0..codes.len())
        .into_par_iter()
        .map(|i| {
            for j in (i + 1)..codes.len() {
                let est = estimate_distance(&codes[i], &codes[j], lambda, m)?.estimate;
                if (est - dists[i][j]).abs() >= threshold {
                    return Ok(true);
                }
            }
            Ok::<_, Error>(false)
        })
        .try_reduce(|| false, |x, y| Ok(x || y))?;
    if scan_found {
        return Ok((true, true, false));
    }

    // Witness attempts at the suggested constraint count and its
    // half/double retries.
    let body = spec.body();
    let mut tried: Vec<usize> = Vec::new();
    for cand in [k_base, k_base / 2, k_base * 2] {
        let k = cand.clamp(1, m / 2);
        if tried.contains(&k) {
            continue;
        }
        tried.push(k);
        let w = find_adversarial_pair(&a, &tau, &body, spec.delta, k)?;
        if w.found {
            let est = (2.0 * std::f64::consts::PI).sqrt() * lambda * w.flips as f64 / m as f64;
            if (est - w.norm).abs() >= threshold {
                return Ok((true, false, true));
            }
        }
    }
    Ok((false, false, false))
}

/// Failure rates of the same scan set at a width-only sketch length
/// `m_low = ceil(width^2 / delta^2)` and at the planned length
/// `m_high = ceil(lambda * width^2 / delta^3)`, over `seeds` independent
/// `(A, tau)` draws, with `lambda = sqrt(ln(e / delta))`. A seed counts as
/// failed when some pair of body points has its distance misreported by at
/// least `2 delta`, certified either by scanning the sampled pairs or by
/// the adversarial witness against the origin.
pub fn run_counterexample_comparison(
    spec: &CounterexampleSpec,
    seeds: u64,
    width_draws: usize,
    root_seed: u64,
) -> Result<ComparisonReport> {
    spec.validate()?;
    if seeds == 0 {
        return Err(Error::InvalidArgument("seeds must be positive".to_string()));
    }
    let delta = spec.delta;
    let lambda = (std::f64::consts::E / delta).ln().sqrt();

    let sample_stream = derive_stream(root_seed, "counter/sample");
    let t = build_counterexample_set(spec, &sample_stream)?;
    let pts = t.points();
    let dists: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| pts.iter().map(|q| sets::dist(p, q)).collect())
        .collect();

    let width_stream = derive_stream(root_seed, "counter/width");
    let body_w = body_width(spec, width_draws, &width_stream)?;
    let local_w = local_body_width(spec, width_draws, &width_stream.child("local"))?;

    let m_low = ((body_w.mean * body_w.mean) / (delta * delta)).ceil() as usize;
    let m_high = ((lambda * body_w.mean * body_w.mean) / (delta * delta * delta)).ceil() as usize;

    let mut rates = [0.0f64; 2];
    let mut scan_counts = [0u64; 2];
    let mut witness_counts = [0u64; 2];
    for (slot, &m) in [m_low, m_high].iter().enumerate() {
        let k_base = suggest_witness_k(m, lambda, delta, local_w.mean);
        let mut failures = 0u64;
        for seed_index in 0..seeds {
            let (failed, by_scan, by_witness) =
                one_failure_check(spec, &t, &dists, lambda, m, k_base, root_seed, seed_index)?;
            failures += u64::from(failed);
            scan_counts[slot] += u64::from(by_scan);
            witness_counts[slot] += u64::from(by_witness);
        }
        rates[slot] = failures as f64 / seeds as f64;
    }

    Ok(ComparisonReport {
        delta,
        lambda,
        body_width: body_w.mean,
        local_width: local_w.mean,
        m_low,
        m_high,
        seeds,
        rate_low: rates[0],
        rate_high: rates[1],
        separation: rates[0] - rates[1],
        scan_failures_low: scan_counts[0],
        witness_failures_low: witness_counts[0],
        scan_failures_high: scan_counts[1],
        witness_failures_high: witness_counts[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> CounterexampleSpec {
        CounterexampleSpec {
            r: 3,
            epsilon: 0.1,
            eta: 0.9,
            delta: 0.25,
            i_sphere: 8,
            i_ball: 4,
            j_sphere: 8,
            products: 8,
        }
    }

    #[test]
    fn dimension_and_blocks_follow_the_formula() {
        let spec = small_spec();
        assert_eq!(spec.n(), 270); // floor(0.9 * 3 / 0.01)
        assert_eq!(spec.j_len(), 267);
        spec.validate().unwrap();
    }

    #[test]
    fn epsilon_at_or_above_half_delta_is_rejected() {
        let mut spec = small_spec();
        spec.epsilon = 0.125; // exactly delta / 2
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("delta/2"), "{err}");
        spec.epsilon = 0.2;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn degenerate_shapes_are_rejected() {
        let mut spec = small_spec();
        spec.r = 0;
        assert!(spec.validate().is_err());

        let mut spec = small_spec();
        // eta * r / eps^2 = 0.9 * 3 / 0.81 = 3.33 -> n = 3 = r: no J block.
        spec.epsilon = 0.9;
        spec.delta = 2.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sampled_points_live_in_the_body_with_the_expected_radius() {
        let spec = small_spec();
        let stream = derive_stream(61, "counter");
        let t = build_counterexample_set(&spec, &stream).unwrap();
        assert_eq!(t.n(), 270);
        assert_eq!(t.len(), 1 + 8 + 4 + 8 + 8);
        let body = spec.body();
        let mut saw_product_scale = false;
        for p in t.points() {
            assert!(body.contains(p));
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= (1.0 + spec.epsilon * spec.epsilon).sqrt() + 1e-12);
            if norm > 1.0 + 1e-9 {
                saw_product_scale = true;
            }
        }
        // Product points exceed unit norm: sqrt(1 + eps^2).
        assert!(saw_product_scale);
        // The origin is the first point.
        assert!(t.points()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn body_width_matches_the_block_decomposition() {
        // E sup = E‖G_I‖ + eps E‖G_J‖. For r = 1 the first term is
        // E|g| = sqrt(2/pi); the second block at dimension 267 contributes
        // roughly eps * sqrt(267 - 0.5). Check against a direct bound.
        let spec = CounterexampleSpec {
            r: 1,
            epsilon: 0.1,
            eta: 0.9,
            delta: 0.25,
            i_sphere: 2,
            i_ball: 2,
            j_sphere: 2,
            products: 2,
        };
        // n = floor(0.9/0.01) = 90, j = 89.
        assert_eq!(spec.n(), 90);
        let stream = derive_stream(62, "width");
        let w = body_width(&spec, 4000, &stream).unwrap();
        let expect = (2.0 / std::f64::consts::PI).sqrt() + 0.1 * (89.0f64 - 0.5).sqrt();
        assert!(
            (w.mean - expect).abs() <= 4.0 * w.std_error + 0.01,
            "width {} vs {}",
            w.mean,
            expect
        );
    }

    #[test]
    fn local_width_is_capped_by_the_delta_ball() {
        // The localized width can never exceed delta * E‖G‖ (the width of
        // the delta-ball) nor the full body width.
        let spec = small_spec();
        let stream = derive_stream(63, "lwidth");
        let local = local_body_width(&spec, 3000, &stream).unwrap();
        let full = body_width(&spec, 3000, &stream.child("full")).unwrap();
        let ball = spec.delta * (spec.n() as f64).sqrt();
        assert!(local.mean <= full.mean + 4.0 * (local.std_error + full.std_error));
        assert!(local.mean <= ball);
        assert!(local.mean > 0.0);
    }

    #[test]
    fn width_streams_are_deterministic() {
        let spec = small_spec();
        let stream = derive_stream(64, "det");
        let a = body_width(&spec, 500, &stream).unwrap();
        let b = body_width(&spec, 500, &stream).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn comparison_runs_end_to_end_at_toy_scale() {
        // Tiny instance: a small eta and a coarse epsilon keep the ambient
        // dimension low enough for a unit test.
        let spec = CounterexampleSpec {
            r: 2,
            epsilon: 0.09,
            eta: 0.2,
            delta: 0.2,
            i_sphere: 6,
            i_ball: 3,
            j_sphere: 6,
            products: 6,
        };
        // n = floor(0.2 * 2 / 0.0081) = 49.
        assert_eq!(spec.n(), 49);
        let report = run_counterexample_comparison(&spec, 4, 400, 7).unwrap();
        assert_eq!(report.seeds, 4);
        assert!(report.m_low >= 1 && report.m_high > report.m_low);
        assert!((0.0..=1.0).contains(&report.rate_low));
        assert!((0.0..=1.0).contains(&report.rate_high));
        assert_eq!(report.separation, report.rate_low - report.rate_high);
        assert!(
            report.scan_failures_low + report.witness_failures_low
                >= (report.rate_low * 4.0).round() as u64
        );
    }
}
