//! Deterministic keyed random streams and the samplers built on them.
//!
//! Every random quantity in this crate is drawn from a [`StreamHandle`]: a
//! counter-based generator addressed by `(root_seed, label)`. Equal seed and
//! label always reproduce the same sequence, distinct labels give streams
//! that behave independently, and the counter makes any position in a stream
//! addressable without replaying the prefix. Parallel code derives one child
//! stream per unit of work instead of sharing a handle, which keeps results
//! independent of how work is scheduled.
//!
//! Uniform draws come from a SplitMix64-style counter mix: draw `i` of a
//! stream is `mix(key + i * GAMMA)`. Gaussians use the Box-Muller transform
//! with both outputs consumed, so each pair of uniforms yields a pair of
//! gaussians; the transform is exact in distribution up to the 53-bit
//! resolution of the uniforms. Dither values are an affine map of a uniform
//! draw, and sphere points are normalized gaussian vectors.

use crate::error::{invalid, mismatch, Result};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_TWEAK: u64 = 0xA076_1D64_78BD_642F;
const BYTE_SALT: u64 = 0xFF51_AFD7_ED55_8CCD;
const U53_INV: f64 = 1.0 / (1u64 << 53) as f64;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(base: u64, label: &str) -> u64 {
    let mut h = mix(base ^ SEED_TWEAK);
    for &b in label.as_bytes() {
        h = mix(h ^ (b as u64).wrapping_mul(BYTE_SALT));
    }
    mix(h ^ (label.len() as u64))
}

/// A single-consumer handle onto one labeled random stream.
///
/// The handle owns a cursor (`counter`) into the stream; cloning and
/// re-deriving are both cheap and both reproduce draws exactly. A cached
/// second Box-Muller output is held between odd and even gaussian draws and
/// is discarded whenever the cursor is moved explicitly.
#[derive(Debug, Clone)]
pub struct StreamHandle {
    root_seed: u64,
    label: String,
    key: u64,
    counter: u64,
    cached_gaussian: Option<f64>,
}

/// Creates the stream addressed by `(root_seed, label)`, positioned at its
/// first draw.
pub fn derive_stream(root_seed: u64, label: &str) -> StreamHandle {
    StreamHandle {
        root_seed,
        label: label.to_string(),
        key: derive_key(root_seed, label),
        counter: 0,
        cached_gaussian: None,
    }
}

impl StreamHandle {
    /// Seed this stream was derived from.
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    /// Label path of this stream.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of uniform draws consumed so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Derives an independent stream keyed by this stream's identity and a
    /// sub-label. The child starts at counter 0 and does not depend on how
    /// far the parent has advanced.
    pub fn child(&self, label: &str) -> StreamHandle {
        StreamHandle {
            root_seed: self.root_seed,
            label: format!("{}/{}", self.label, label),
            key: derive_key(self.key, label),
            counter: 0,
            cached_gaussian: None,
        }
    }

    /// Advances the cursor by `draws` uniform positions without producing
    /// values. Discards any cached gaussian.
    pub fn skip(&mut self, draws: u64) {
        self.counter += draws;
        self.cached_gaussian = None;
    }

    /// Next uniform 64-bit draw.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Next uniform draw in `[0, 1)` (53-bit resolution).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * U53_INV
    }

    /// Next uniform draw in `(0, 1]`; used where `ln(0)` must be impossible.
    #[inline]
    fn next_unit_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * U53_INV
    }

    #[inline]
    fn gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_unit_open();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// Next standard gaussian draw. Draws are produced in Box-Muller pairs;
    /// the second member of a pair is cached and returned by the following
    /// call, so `2k` single draws consume exactly `2k` uniforms.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.cached_gaussian.take() {
            return g;
        }
        let (a, b) = self.gaussian_pair();
        self.cached_gaussian = Some(b);
        a
    }

    /// Fills `out` with consecutive gaussian draws, equivalent to calling
    /// [`Self::next_gaussian`] once per slot.
    pub fn fill_gaussians(&mut self, out: &mut [f64]) {
        let mut i = 0;
        if let Some(g) = self.cached_gaussian.take() {
            if out.is_empty() {
                self.cached_gaussian = Some(g);
                return;
            }
            out[0] = g;
            i = 1;
        }
        while i + 1 < out.len() {
            let (a, b) = self.gaussian_pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.next_gaussian();
        }
    }
}

/// Reads entries `start .. start + out.len()` of the gaussian sequence of
/// `stream`, regardless of the handle's current position. The result is
/// identical to the corresponding slice of one long [`StreamHandle::fill_gaussians`]
/// from a freshly derived handle, which makes bulk gaussian data randomly
/// addressable (for example, regenerating one row of a matrix that was never
/// materialized).
pub fn gaussian_entries(stream: &mut StreamHandle, start: u64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    // Pair p covers entries 2p and 2p+1 and consumes uniforms 2p+1, 2p+2.
    stream.counter = 2 * (start / 2);
    stream.cached_gaussian = None;
    let mut entry = start;
    let end = start + out.len() as u64;
    while entry < end {
        let (a, b) = stream.gaussian_pair();
        let pair_base = 2 * (entry / 2);
        if pair_base >= start && entry == pair_base {
            out[(entry - start) as usize] = a;
            entry += 1;
            if entry < end {
                out[(entry - start) as usize] = b;
                entry += 1;
            }
        } else {
            // Leading odd entry: keep only the second member of the pair.
            out[(entry - start) as usize] = b;
            entry += 1;
        }
    }
}

/// Dense row-major matrix with independent standard gaussian entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GaussianMatrix {
    /// Wraps explicit row-major data; intended for tests and small exact
    /// constructions. All entries must be finite.
    pub fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(mismatch(format!(
                "matrix data length {} != {} x {}",
                data.len(),
                rows,
                cols
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(GaussianMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x` as a dense vector of length `rows`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(mismatch(format!(
                "vector length {} != matrix columns {}",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }
}

/// Dot product with four independent accumulators. The fixed association
/// order keeps results identical across runs while letting the compiler
/// vectorize the bulk of the loop.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Samples an `m x n` matrix of independent standard gaussians from `stream`.
pub fn sample_gaussian_matrix(stream: &mut StreamHandle, m: usize, n: usize) -> Result<GaussianMatrix> {
    if m == 0 || n == 0 {
        return Err(invalid("matrix dimensions must be positive"));
    }
    let mut data = vec![0.0; m * n];
    gaussian_entries(stream, 0, &mut data);
    GaussianMatrix::from_parts(m, n, data)
}

/// Uniform dither vector on `[-lambda, lambda]^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DitherVector {
    lambda: f64,
    values: Vec<f64>,
}

impl DitherVector {
    /// Wraps explicit dither values; every value must lie in `[-lambda, lambda]`.
    pub fn from_parts(lambda: f64, values: Vec<f64>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("dither scale lambda must be positive and finite"));
        }
        if values.is_empty() {
            return Err(invalid("dither vector must be non-empty"));
        }
        if !values.iter().all(|v| v.abs() <= lambda) {
            return Err(invalid("dither values must lie in [-lambda, lambda]"));
        }
        Ok(DitherVector { lambda, values })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples `m` independent uniform dithers on `[-lambda, lambda]`.
pub fn sample_dither(stream: &mut StreamHandle, m: usize, lambda: f64) -> Result<DitherVector> {
    if m == 0 {
        return Err(invalid("dither length must be positive"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("dither scale lambda must be positive and finite"));
    }
    let values = (0..m)
        .map(|_| (2.0 * stream.next_f64() - 1.0) * lambda)
        .collect();
    DitherVector::from_parts(lambda, values)
}

/// Samples one point uniformly on the unit sphere of `R^n` by normalizing a
/// gaussian vector; an exactly-zero draw is redrawn.
pub fn sample_sphere(stream: &mut StreamHandle, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sphere dimension must be positive"));
    }
    let mut v = vec![0.0; n];
    loop {
        stream.fill_gaussians(&mut v);
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
            return Ok(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seed_and_label_replay_exactly() {
        let mut a = derive_stream(7, "A");
        let mut b = derive_stream(7, "A");
        let xs: Vec<u64> = (0..10).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..10).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn distinct_labels_differ() {
        let mut a = derive_stream(7, "A");
        let mut b = derive_stream(7, "B");
        let differs = (0..16).any(|_| a.next_u64() != b.next_u64());
        assert!(differs);
    }

    #[test]
    fn rederived_handle_continues_in_lockstep() {
        let mut a = derive_stream(7, "A");
        let first: Vec<u64> = (0..10).map(|_| a.next_u64()).collect();
        let mut b = derive_stream(7, "A");
        let again: Vec<u64> = (0..10).map(|_| b.next_u64()).collect();
        assert_eq!(first, again);
        assert_eq!(a.counter(), 10);
    }

    #[test]
    fn children_are_deterministic_and_position_independent() {
        let parent_fresh = derive_stream(3, "root");
        let mut parent_advanced = derive_stream(3, "root");
        for _ in 0..100 {
            parent_advanced.next_u64();
        }
        let mut c1 = parent_fresh.child("trial/0");
        let mut c2 = parent_advanced.child("trial/0");
        for _ in 0..8 {
            assert_eq!(c1.next_u64(), c2.next_u64());
        }
        assert_eq!(c1.label(), "root/trial/0");
    }

    #[test]
    fn uniform_draws_stay_in_unit_interval() {
        let mut s = derive_stream(11, "u");
        for _ in 0..10_000 {
            let u = s.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn bulk_and_single_gaussian_draws_agree() {
        let mut a = derive_stream(5, "g");
        let mut bulk = vec![0.0; 9];
        a.fill_gaussians(&mut bulk);
        let mut b = derive_stream(5, "g");
        let singles: Vec<f64> = (0..9).map(|_| b.next_gaussian()).collect();
        assert_eq!(bulk, singles);
    }

    #[test]
    fn gaussian_entries_random_access_matches_bulk() {
        let mut base = derive_stream(17, "mat");
        let mut all = vec![0.0; 64];
        gaussian_entries(&mut base, 0, &mut all);
        for start in [0u64, 1, 2, 7, 30, 63] {
            let len = (64 - start as usize).min(9);
            let mut s = derive_stream(17, "mat");
            let mut part = vec![0.0; len];
            gaussian_entries(&mut s, start, &mut part);
            assert_eq!(part, &all[start as usize..start as usize + len]);
        }
    }

    #[test]
    fn gaussian_matrix_moments_are_sane() {
        let mut s = derive_stream(42, "matrix-moments");
        let a = sample_gaussian_matrix(&mut s, 1000, 1000).unwrap();
        let n = 1_000_000f64;
        let mean: f64 = a.row_iter_sum() / n;
        assert!(mean.abs() <= 4.0 / n.sqrt(), "mean {mean}");
        let var: f64 = (0..1000)
            .map(|i| a.row(i).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>())
            .sum::<f64>()
            / n;
        assert!((var - 1.0).abs() <= 0.02, "var {var}");
    }

    #[test]
    fn gaussian_kurtosis_close_to_three() {
        let mut s = derive_stream(9, "kurtosis");
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for _ in 0..n {
            let g = s.next_gaussian();
            sum += g;
            sum2 += g * g;
            sum4 += g * g * g * g;
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 0.01);
        let var = sum2 / n as f64 - mean * mean;
        let kurt = (sum4 / n as f64) / (var * var);
        assert!((kurt - 3.0).abs() <= 0.15, "kurtosis {kurt}");
    }

    #[test]
    fn dither_support_and_moments() {
        let mut s = derive_stream(13, "dither");
        let lambda = 2.0;
        let m = 1_000_000usize;
        let d = sample_dither(&mut s, m, lambda).unwrap();
        assert!(d.values().iter().all(|v| v.abs() <= lambda));
        let mean: f64 = d.values().iter().sum::<f64>() / m as f64;
        let tol = 4.0 * lambda / (3.0 * m as f64).sqrt();
        assert!(mean.abs() <= tol, "mean {mean} tol {tol}");
        let var: f64 = d.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        let target = lambda * lambda / 3.0;
        assert!((var - target).abs() <= 0.02 * target, "var {var}");
    }

    #[test]
    fn sphere_samples_are_unit_norm_with_flat_coordinates() {
        let mut s = derive_stream(23, "sphere");
        let n = 8;
        let draws = 100_000;
        let mut sq_sums = vec![0.0; n];
        for _ in 0..draws {
            let p = sample_sphere(&mut s, n).unwrap();
            let norm = dot(&p, &p).sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
            for (acc, x) in sq_sums.iter_mut().zip(&p) {
                *acc += x * x;
            }
        }
        for acc in sq_sums {
            let v = acc / draws as f64;
            assert!((v - 1.0 / n as f64).abs() <= 0.05 / n as f64, "coordinate var {v}");
        }
    }

    #[test]
    fn one_dimensional_sphere_is_a_sign() {
        let mut s = derive_stream(29, "sphere1");
        for _ in 0..32 {
            let p = sample_sphere(&mut s, 1).unwrap();
            assert!(p[0] == 1.0 || p[0] == -1.0);
        }
    }

    #[test]
    fn zero_dimension_requests_are_rejected() {
        let mut s = derive_stream(1, "z");
        assert!(sample_sphere(&mut s, 0).is_err());
        assert!(sample_gaussian_matrix(&mut s, 0, 4).is_err());
        assert!(sample_gaussian_matrix(&mut s, 4, 0).is_err());
        assert!(sample_dither(&mut s, 0, 1.0).is_err());
        assert!(sample_dither(&mut s, 4, 0.0).is_err());
        assert!(sample_dither(&mut s, 4, f64::NAN).is_err());
    }

    #[test]
    fn skip_then_fill_matches_sequence_tail() {
        let mut base = derive_stream(31, "skip");
        let mut all = vec![0.0; 10];
        base.fill_gaussians(&mut all);
        let mut s = derive_stream(31, "skip");
        s.skip(4);
        let mut tail = vec![0.0; 6];
        s.fill_gaussians(&mut tail);
        assert_eq!(tail, &all[4..]);
    }

    impl GaussianMatrix {
        fn row_iter_sum(&self) -> f64 {
            self.data.iter().sum()
        }
    }
}
