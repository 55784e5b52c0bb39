//! Binary sketches of Euclidean point sets via dithered random hyperplanes.
//!
//! A point `x` in `R^n` is compressed to `m` bits by `f(x) = sign(A x + tau)`,
//! where `A` has independent standard gaussian rows and `tau` is a uniform
//! dither on `[-lambda, lambda]^m`. The scaled Hamming distance
//! `sqrt(2*pi) * (lambda / m) * d_H(f(x), f(y))` then approximates
//! `||x - y||_2` uniformly over the set, up to an additive error, so the
//! codes behave like a cheap metric embedding into the Hamming cube.
//!
//! The crate is organized around that pipeline:
//!
//! * [`randkit`] - deterministic keyed random streams and the gaussian /
//!   dither / sphere samplers everything else draws from.
//! * [`embedding`] - code generation, Hamming distances, distance and inner
//!   product estimators, and a binary serialization format for code sets.
//! * [`oracle`] - closed-form dither statistics: the exact probability that
//!   one dithered sign comparison separates two projections, and the exact
//!   expected Hamming distance it induces.
//! * [`geomlib`] - the geometry used to size a sketch: gaussian widths,
//!   covering nets, partial-sum norms, the parameter planner, and the
//!   regularity checks a sampled matrix is supposed to satisfy.

pub mod embedding;
mod error;
pub mod geomlib;
pub mod oracle;
pub mod randkit;

pub use error::{Error, Result};
