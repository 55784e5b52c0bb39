//! Sign sketches, Hamming distances, and the estimators built on them.
//!
//! `encode` turns a point into `m` bits, one per dithered hyperplane:
//! bit `j` is 1 exactly when `<a_j, x> + tau_j >= 0` (with `sign(0) := +1`
//! so codes are deterministic). Bits are packed LSB-first: bit `j` lives in
//! byte `j / 8` at position `j % 8`, and padding bits past `m - 1` stay zero
//! so whole-byte XOR/popcount gives exact Hamming distances.
//!
//! `estimate_distance` rescales a Hamming distance by `sqrt(2*pi) * lambda / m`
//! to land in Euclidean units, and `estimate_inner_product` polarizes two
//! distance estimates into an inner product. Both are functions of codes
//! only; the inner-product estimator therefore takes the code of `-y`
//! explicitly instead of negating anything internally.
//!
//! Code sets travel in a small binary format (magic `HTSK`) documented at
//! [`write_sketch_set`]; reads are byte-exact inverses of writes.

use std::io::{Read, Write};

use crate::error::{invalid, mismatch, Error, Result};
use crate::randkit::{dot, DitherVector, GaussianMatrix};

/// One `m`-bit sketch, bit-packed LSB-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchCode {
    m: usize,
    bits: Vec<u8>,
}

impl SketchCode {
    /// All-zero code of `m` bits.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("code length m must be positive"));
        }
        Ok(SketchCode {
            m,
            bits: vec![0u8; m.div_ceil(8)],
        })
    }

    /// Wraps packed bytes, enforcing length and zero padding.
    pub fn from_bytes(m: usize, bits: Vec<u8>) -> Result<Self> {
        if m == 0 {
            return Err(invalid("code length m must be positive"));
        }
        if bits.len() != m.div_ceil(8) {
            return Err(mismatch(format!(
                "code of {m} bits needs {} bytes, got {}",
                m.div_ceil(8),
                bits.len()
            )));
        }
        let code = SketchCode { m, bits };
        if !code.padding_is_zero() {
            return Err(invalid("padding bits beyond m-1 must be zero"));
        }
        Ok(code)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn bit(&self, j: usize) -> bool {
        (self.bits[j / 8] >> (j % 8)) & 1 == 1
    }

    pub fn set_bit(&mut self, j: usize, value: bool) {
        if value {
            self.bits[j / 8] |= 1 << (j % 8);
        } else {
            self.bits[j / 8] &= !(1 << (j % 8));
        }
    }

    fn padding_is_zero(&self) -> bool {
        let tail = self.m % 8;
        if tail == 0 {
            return true;
        }
        let mask = !0u8 << tail;
        self.bits[self.bits.len() - 1] & mask == 0
    }
}

/// Encodes `x` as `sign(A x + tau)`.
pub fn encode(a: &GaussianMatrix, tau: &DitherVector, x: &[f64]) -> Result<SketchCode> {
    if tau.len() != a.rows() {
        return Err(mismatch(format!(
            "dither length {} != matrix rows {}",
            tau.len(),
            a.rows()
        )));
    }
    if x.len() != a.cols() {
        return Err(mismatch(format!(
            "point dimension {} != matrix columns {}",
            x.len(),
            a.cols()
        )));
    }
    let mut code = SketchCode::new(a.rows())?;
    for (j, &t) in tau.values().iter().enumerate() {
        if dot(a.row(j), x) + t >= 0.0 {
            code.set_bit(j, true);
        }
    }
    Ok(code)
}

/// Number of differing bits between two codes of equal length.
pub fn hamming(c1: &SketchCode, c2: &SketchCode) -> Result<u64> {
    if c1.m != c2.m {
        return Err(invalid(format!(
            "cannot compare codes of {} and {} bits",
            c1.m, c2.m
        )));
    }
    // Padding is zero in both codes, so whole bytes can be XORed.
    Ok(c1
        .bits
        .iter()
        .zip(&c2.bits)
        .map(|(a, b)| (a ^ b).count_ones() as u64)
        .sum())
}

/// A Hamming distance rescaled into Euclidean units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    /// Raw differing-bit count in `[0, m]`.
    pub hamming: u64,
    /// `sqrt(2*pi) * lambda * hamming / m`, in `[0, sqrt(2*pi) * lambda]`.
    pub estimate: f64,
}

/// Scales the Hamming distance of two codes by `sqrt(2*pi) * lambda / m`.
pub fn estimate_distance(
    c1: &SketchCode,
    c2: &SketchCode,
    lambda: f64,
    m: usize,
) -> Result<DistanceEstimate> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda must be positive and finite"));
    }
    if m != c1.m {
        return Err(invalid(format!("stated m={} but codes carry m={}", m, c1.m)));
    }
    let d = hamming(c1, c2)?;
    let scale = (2.0 * std::f64::consts::PI).sqrt();
    Ok(DistanceEstimate {
        hamming: d,
        estimate: scale * lambda * d as f64 / m as f64,
    })
}

/// Polarization estimate of `<x, y>` from codes of `x`, `y`, and `-y`
/// produced under one `(A, tau)`.
pub fn estimate_inner_product(
    c_x: &SketchCode,
    c_y: &SketchCode,
    c_neg_y: &SketchCode,
    lambda: f64,
    m: usize,
) -> Result<f64> {
    let d_far = estimate_distance(c_x, c_neg_y, lambda, m)?.estimate;
    let d_near = estimate_distance(c_x, c_y, lambda, m)?.estimate;
    Ok((d_far * d_far - d_near * d_near) / 4.0)
}

/// A set of codes with the header needed to reproduce and interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchSet {
    /// Ambient dimension the codes were produced from.
    pub n: u32,
    /// Bits per code.
    pub m: u32,
    /// Dither scale.
    pub lambda: f64,
    /// Seed of the stream family that generated `A` and `tau`.
    pub root_seed: u64,
    pub codes: Vec<SketchCode>,
}

impl SketchSet {
    pub fn new(n: u32, m: u32, lambda: f64, root_seed: u64, codes: Vec<SketchCode>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(invalid("sketch set requires positive n and m"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda must be positive and finite"));
        }
        if codes.iter().any(|c| c.m != m as usize) {
            return Err(mismatch("all codes in a set must carry the header's m"));
        }
        Ok(SketchSet {
            n,
            m,
            lambda,
            root_seed,
            codes,
        })
    }
}

const MAGIC: [u8; 4] = *b"HTSK";
const VERSION: u8 = 0x01;

/// Serializes a sketch set.
///
/// Layout: magic `HTSK`, version byte `0x01`, then little-endian `n` (u32),
/// `m` (u32), `lambda` (IEEE-754 binary64), `root_seed` (u64), `count` (u32),
/// followed by `count` runs of `ceil(m/8)` code bytes with zero padding.
pub fn write_sketch_set(set: &SketchSet, sink: &mut impl Write) -> Result<()> {
    sink.write_all(&MAGIC)?;
    sink.write_all(&[VERSION])?;
    sink.write_all(&set.n.to_le_bytes())?;
    sink.write_all(&set.m.to_le_bytes())?;
    sink.write_all(&set.lambda.to_le_bytes())?;
    sink.write_all(&set.root_seed.to_le_bytes())?;
    sink.write_all(&(set.codes.len() as u32).to_le_bytes())?;
    for code in &set.codes {
        sink.write_all(&code.bits)?;
    }
    Ok(())
}

struct CountingReader<'a, R: Read> {
    inner: &'a mut R,
    offset: u64,
}

impl<R: Read> CountingReader<'_, R> {
    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            let n = self.inner.read(&mut buf[filled..])?;
            if n == 0 {
                return Err(Error::Format {
                    offset: self.offset + filled as u64,
                    message: format!("truncated while reading {what}"),
                });
            }
            filled += n;
        }
        self.offset += buf.len() as u64;
        Ok(())
    }
}

/// Parses a sketch set written by [`write_sketch_set`]; the inverse is
/// byte-exact. Malformed input fails with the byte offset of the problem and
/// no partial result.
pub fn read_sketch_set(source: &mut impl Read) -> Result<SketchSet> {
    let mut r = CountingReader {
        inner: source,
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {magic:02x?}, expected \"HTSK\""),
        });
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version, "version")?;
    if version[0] != VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {:#04x}", version[0]),
        });
    }
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u32buf, "n")?;
    let n = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u32buf, "m")?;
    let m = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u64buf, "lambda")?;
    let lambda = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf, "root_seed")?;
    let root_seed = u64::from_le_bytes(u64buf);
    r.read_exact(&mut u32buf, "count")?;
    let count = u32::from_le_bytes(u32buf);

    if n == 0 || m == 0 {
        return Err(Error::Format {
            offset: 5,
            message: format!("header requires positive n and m, got n={n} m={m}"),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Format {
            offset: 13,
            message: "header lambda must be positive and finite".to_string(),
        });
    }

    let code_bytes = (m as usize).div_ceil(8);
    let mut codes = Vec::with_capacity(count as usize);
    for i in 0..count {
        let start = r.offset;
        let mut bits = vec![0u8; code_bytes];
        r.read_exact(&mut bits, "code bytes")?;
        let code = SketchCode::from_bytes(m as usize, bits).map_err(|_| Error::Format {
            offset: start,
            message: format!("code {i} has nonzero padding bits"),
        })?;
        codes.push(code);
    }
    SketchSet::new(n, m, lambda, root_seed, codes)
}
