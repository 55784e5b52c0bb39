//! Closed-form statistics of one dithered sign comparison.
//!
//! For fixed projections `a` and `b` and a uniform dither `tau` on
//! `[-lambda, lambda]`, the probability that `sign(a + tau)` and
//! `sign(b + tau)` disagree has an exact piecewise form:
//!
//! ```text
//! 2 lambda P = | clip(a) - clip(b) |,   clip(x) = clamp(x, -lambda, lambda)
//! ```
//!
//! split below into the seven regions of the `(a, b)` plane that the clamp
//! induces. Values on the boundary `|a| = lambda` belong to the inside
//! region. Summing the law over the rows of a projection matrix gives the
//! exact expected Hamming distance between two codes, which is what Monte
//! Carlo runs in the test suites are checked against.

use crate::error::{invalid, Result};
use crate::randkit::GaussianMatrix;

/// Tail excess `(|x| - lambda)_+`: how far `x` pokes out of the dither band.
pub fn phi_lambda(x: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !x.is_finite() {
        return Err(invalid("phi_lambda input must be finite"));
    }
    Ok((x.abs() - lambda).max(0.0))
}

/// Region of the `(a, b)` plane a separation probability was computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationRegion {
    /// `|a| <= lambda` and `|b| <= lambda`.
    BothInside,
    /// Both beyond `lambda` on the same side; separation impossible.
    SameSideOut,
    /// Beyond `lambda` on opposite sides; separation certain.
    OppositeOut,
    /// `a > lambda`, `|b| <= lambda`.
    AOutBIn,
    /// `b > lambda`, `|a| <= lambda`.
    BOutAIn,
    /// `a < -lambda`, `|b| <= lambda`.
    ANegoutBIn,
    /// `b < -lambda`, `|a| <= lambda`.
    BNegoutAIn,
}

/// Exact separation probability together with the region that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationCase {
    pub probability: f64,
    pub region: SeparationRegion,
}

/// Probability that a uniform dither on `[-lambda, lambda]` separates the
/// signs of `a + tau` and `b + tau`.
pub fn separation_probability(a: f64, b: f64, lambda: f64) -> Result<SeparationCase> {
    check_lambda(lambda)?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("separation inputs must be finite"));
    }
    let two_lambda = 2.0 * lambda;
    let a_in = a.abs() <= lambda;
    let b_in = b.abs() <= lambda;
    let (p, region) = match (a_in, b_in) {
        (true, true) => ((a - b).abs() / two_lambda, SeparationRegion::BothInside),
        (false, false) => {
            if (a > lambda) == (b > lambda) {
                (0.0, SeparationRegion::SameSideOut)
            } else {
                (1.0, SeparationRegion::OppositeOut)
            }
        }
        (false, true) => {
            if a > lambda {
                ((lambda - b) / two_lambda, SeparationRegion::AOutBIn)
            } else {
                ((lambda + b) / two_lambda, SeparationRegion::ANegoutBIn)
            }
        }
        (true, false) => {
            if b > lambda {
                ((lambda - a) / two_lambda, SeparationRegion::BOutAIn)
            } else {
                ((lambda + a) / two_lambda, SeparationRegion::BNegoutAIn)
            }
        }
    };
    Ok(SeparationCase {
        probability: p,
        region,
    })
}

/// Exact `E d_H(f(x), f(y))` over the dither, for a fixed matrix: the sum of
/// per-row separation probabilities. The per-row values are summed in sorted
/// order, so permuting the rows of `a_matrix` cannot change the result even
/// at the floating-point level.
pub fn expected_hamming(a_matrix: &GaussianMatrix, x: &[f64], y: &[f64], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let ax = a_matrix.apply(x)?;
    let ay = a_matrix.apply(y)?;
    let mut probs: Vec<f64> = ax
        .iter()
        .zip(&ay)
        .map(|(&a, &b)| separation_probability(a, b, lambda).map(|c| c.probability))
        .collect::<Result<_>>()?;
    probs.sort_by(f64::total_cmp);
    Ok(probs.iter().sum())
}

/// Both sides of the band bound: the clipped separation mass can differ from
/// `|a - b|` by at most the two tail excesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandBound {
    /// `| 2 lambda P - |a - b| |`.
    pub lhs: f64,
    /// `phi_lambda(a) + phi_lambda(b)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the band bound at one `(a, b, lambda)`.
pub fn band_bound(a: f64, b: f64, lambda: f64) -> Result<BandBound> {
    let p = separation_probability(a, b, lambda)?.probability;
    let lhs = (2.0 * lambda * p - (a - b).abs()).abs();
    let rhs = phi_lambda(a, lambda)? + phi_lambda(b, lambda)?;
    Ok(BandBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda must be positive and finite"));
    }
    Ok(())
}
