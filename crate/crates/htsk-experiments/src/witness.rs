//! Constructive search for a pair of body points whose sketch wildly
//! misreports their distance: a short vector that flips the sign of every
//! row whose dither offset is small. The construction interpolates
//! `(A t)_i = -2 tau_i` on the `k` rows with the smallest `|tau_i|` using
//! the minimum-norm solution, then shrinks the result into the distance
//! budget without undoing the flips.

use rayon::prelude::*;

use htsk::randkit::{dot, DitherVector, GaussianMatrix};
use htsk::{Error, Result};

use crate::linalg::{cholesky_solve, SquareMatrix};
use crate::report::WitnessResult;

/// Membership test for the convex body the witness must stay inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Body {
    /// Euclidean ball of the given radius about the origin.
    Ball { radius: f64 },
    /// Product of a unit ball on the first `r` coordinates and an
    /// `epsilon`-ball on the rest.
    TwoBlock { r: usize, epsilon: f64 },
}

impl Body {
    /// Block-by-block membership with a small relative slack for rounding.
    pub fn contains(&self, t: &[f64]) -> bool {
        const SLACK: f64 = 1.0 + 1e-9;
        match *self {
            Body::Ball { radius } => norm(t) <= radius * SLACK,
            Body::TwoBlock { r, epsilon } => {
                norm(&t[..r.min(t.len())]) <= SLACK
                    && norm(&t[r.min(t.len())..]) <= epsilon * SLACK
            }
        }
    }

    fn describe_violation(&self, t: &[f64]) -> String {
        match *self {
            Body::Ball { radius } => format!(
                "witness norm {} exceeds the body radius {radius}",
                norm(t)
            ),
            Body::TwoBlock { r, epsilon } => {
                let head = norm(&t[..r.min(t.len())]);
                let tail = norm(&t[r.min(t.len())..]);
                format!(
                    "witness leaves the product body: first-block norm {head} (cap 1), \
                     second-block norm {tail} (cap {epsilon})"
                )
            }
        }
    }
}

/// Suggested number of constraint rows to flip: the scaling that balances
/// the interpolation norm against the distance budget, clamped to
/// `[1, m/2]`. `local_width` is the gaussian width of the body restricted
/// to the `delta`-ball.
pub fn suggest_witness_k(m: usize, lambda: f64, delta: f64, local_width: f64) -> usize {
    let by_length = (m as f64 * local_width / lambda).powf(2.0 / 3.0);
    let by_budget = (local_width / delta) * (local_width / delta);
    let k = by_length.min(by_budget).floor() as usize;
    k.clamp(1, (m / 2).max(1))
}

/// Searches for `t*` in `body` with `‖t*‖ <= delta` whose code differs
/// from the code of the origin on at least `k` rows.
///
/// The `k` rows with the smallest `|tau_i|` are interpolated exactly at
/// `-2 tau_i` (minimum-norm), so each constrained row changes sign. If the
/// interpolant is longer than `delta`, it is scaled down by
/// `sigma = delta / ‖t‖`; any `sigma > 1/2` leaves every constrained row
/// at `(1 - 2 sigma) tau_i`, which still has the opposite sign. Failures
/// (rank-deficient constraints, a required scaling of 1/2 or below, or a
/// scaled witness outside the body) return `found = false` with a
/// diagnostic, not an error.
pub fn find_adversarial_pair(
    a: &GaussianMatrix,
    tau: &DitherVector,
    body: &Body,
    delta: f64,
    k: usize,
) -> Result<WitnessResult> {
    let m = a.rows();
    let n = a.cols();
    if tau.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "dither length {} != matrix rows {m}",
            tau.len()
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    if k == 0 || k > m / 2 {
        return Err(Error::InvalidArgument(format!(
            "constraint count k={k} must lie in [1, m/2] = [1, {}]",
            m / 2
        )));
    }

    let not_found = |diagnostic: String, norm_attempt: f64| WitnessResult {
        found: false,
        t_star: None,
        norm: norm_attempt,
        flips: 0,
        i_used: Vec::new(),
        diagnostic,
    };

    if k > n {
        return Ok(not_found(
            format!(
                "k={k} constraints in ambient dimension {n}: the interpolation rows are \
                 necessarily dependent"
            ),
            0.0,
        ));
    }

    // Rows with the smallest dither magnitudes, ties by index.
    let mut order: Vec<usize> = (0..m).collect();
    let tv = tau.values();
    order.sort_by(|&i, &j| {
        tv[i]
            .abs()
            .total_cmp(&tv[j].abs())
            .then(i.cmp(&j))
    });
    let mut i_used: Vec<usize> = order[..k].to_vec();
    i_used.sort_unstable();

    let rhs: Vec<f64> = i_used.iter().map(|&i| -2.0 * tv[i]).collect();

    // Gram of the selected rows.
    let mut gram = SquareMatrix::zeros(k);
    let entries: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|p| {
            (p..k)
                .map(|q| dot(a.row(i_used[p]), a.row(i_used[q])))
                .collect()
        })
        .collect();
    for (p, row) in entries.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let q = p + off;
            gram.set(p, q, v);
            gram.set(q, p, v);
        }
    }

    let w = match cholesky_solve(&gram, &rhs, 1e-12) {
        Some(w) => w,
        None => {
            return Ok(not_found(
                format!("rank deficiency while interpolating {k} constraint rows"),
                0.0,
            ))
        }
    };

    // t = A_I' w, assembled column-block by column-block in parallel.
    let t: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            for (p, &wp) in w.iter().enumerate() {
                acc += a.row(i_used[p])[c] * wp;
            }
            acc
        })
        .collect();

    let raw_norm = norm(&t);
    if raw_norm == 0.0 {
        return Ok(not_found(
            "interpolant is the zero vector; nothing to flip".to_string(),
            0.0,
        ));
    }
    let sigma = (delta / raw_norm).min(1.0);
    if sigma <= 0.5 {
        return Ok(not_found(
            format!(
                "interpolant norm {raw_norm} is more than twice delta={delta}; shrinking it \
                 into the budget would restore the original signs"
            ),
            raw_norm,
        ));
    }
    let t_star: Vec<f64> = t.iter().map(|v| v * sigma).collect();
    let star_norm = norm(&t_star);

    if !body.contains(&t_star) {
        return Ok(not_found(body.describe_violation(&t_star), star_norm));
    }

    // Count realized sign changes against the origin's code over all rows,
    // and insist that every constrained row actually flipped.
    let projections: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| dot(a.row(i), &t_star))
        .collect();
    let sign = |v: f64| v >= 0.0;
    let flips = projections
        .iter()
        .zip(tv)
        .filter(|(&z, &t)| sign(z + t) != sign(t))
        .count() as u64;
    let unflipped = i_used
        .iter()
        .filter(|&&i| sign(projections[i] + tv[i]) == sign(tv[i]))
        .count();
    if unflipped > 0 {
        return Ok(not_found(
            format!("numerical verification failed: {unflipped} of {k} constrained rows kept \
                     their sign"),
            star_norm,
        ));
    }
    debug_assert!(flips >= k as u64);

    Ok(WitnessResult {
        found: true,
        t_star: Some(t_star),
        norm: star_norm,
        flips,
        i_used,
        diagnostic: String::new(),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
