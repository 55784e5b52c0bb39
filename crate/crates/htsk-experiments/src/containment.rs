//! Random low-dimensional projections of a symmetric point set contain a
//! ball whose radius tracks the set's gaussian width. Each trial projects
//! the set through a fresh `s x n` gaussian map, estimates the inradius of
//! the projected hull over a net of directions, and cross-checks the
//! idealized full-ball projection against an independently computed
//! smallest singular value.

use rayon::prelude::*;

use htsk::geomlib::{dvoretzky_dimension, gaussian_width, PointSet};
use htsk::randkit::{dot, sample_gaussian_matrix, sample_sphere, StreamHandle};
use htsk::{Error, Result};

use crate::linalg::{symmetric_eigenvalues, SquareMatrix};
use crate::report::ContainmentReport;

/// Runs `trials` independent projections of the symmetric set `k_set` to
/// dimension `s` and reports, per trial:
///
/// - the hull inradius `min over net directions u of max over points of
///   <u, A t>` (a direction-net estimate of the largest ball inside the
///   projected convex hull);
/// - the same net statistic for the projected unit ball, whose support in
///   direction `u` is exactly `‖A' u‖`;
/// - the smallest singular value of `A` from a Jacobi eigensolve of
///   `A A'` — the exact inradius of that projected ball, computed without
///   the net.
///
/// The ratios `hull_inradius / width` calibrate the containment constant;
/// the net-versus-spectrum comparison bounds the net's resolution error.
pub fn run_dvoretzky_containment(
    k_set: &PointSet,
    s: usize,
    direction_count: usize,
    trials: u64,
    width_draws: usize,
    stream: &StreamHandle,
) -> Result<ContainmentReport> {
    let n = k_set.n();
    if s == 0 {
        return Err(Error::InvalidArgument(
            "projection dimension s must be positive".to_string(),
        ));
    }
    if s > n {
        return Err(Error::InvalidArgument(format!(
            "projection dimension s={s} exceeds the ambient dimension {n}"
        )));
    }
    if direction_count < 2 {
        return Err(Error::InvalidArgument(
            "the direction net needs at least 2 directions".to_string(),
        ));
    }
    if trials == 0 || width_draws == 0 {
        return Err(Error::InvalidArgument(
            "trials and width draws must be positive".to_string(),
        ));
    }

    // Width and faithful-dimension estimates share one stream.
    let width = gaussian_width(k_set, width_draws, &stream.child("width"))?;
    let d_star = dvoretzky_dimension(k_set, width_draws, &stream.child("width"))?;
    if (s as f64) > d_star {
        return Err(Error::InvalidArgument(format!(
            "projection dimension s={s} exceeds the faithful-dimension estimate {d_star:.3}; \
             the projected hull would collapse below its width"
        )));
    }

    let mut hull = Vec::with_capacity(trials as usize);
    let mut ellipsoid = Vec::with_capacity(trials as usize);
    let mut sigma = Vec::with_capacity(trials as usize);

    for trial in 0..trials {
        let tstream = stream.child(&format!("trial/{trial}"));
        let mut ms = tstream.child("matrix");
        let a = sample_gaussian_matrix(&mut ms, s, n)?;

        // Direction net on the projection sphere; exact for s = 1.
        let directions: Vec<Vec<f64>> = if s == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            let mut ns = tstream.child("net");
            (0..direction_count)
                .map(|_| sample_sphere(&mut ns, s))
                .collect::<Result<_>>()?
        };

        let projected: Vec<Vec<f64>> = k_set
            .points()
            .par_iter()
            .map(|p| a.apply(p))
            .collect::<Result<_>>()?;

        let hull_inradius = directions
            .par_iter()
            .map(|u| {
                projected
                    .iter()
                    .map(|q| dot(u, q))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .reduce(|| f64::INFINITY, f64::min);

        let ellipsoid_inradius = directions
            .par_iter()
            .map(|u| {
                let mut norm2 = 0.0;
                for c in 0..n {
                    let mut acc = 0.0;
                    for (i, ui) in u.iter().enumerate() {
                        acc += ui * a.row(i)[c];
                    }
                    norm2 += acc * acc;
                }
                norm2.sqrt()
            })
            .reduce(|| f64::INFINITY, f64::min);

        // Independent spectral value: A A' is s x s.
        let mut gram = SquareMatrix::zeros(s);
        for i in 0..s {
            for j in i..s {
                let v = dot(a.row(i), a.row(j));
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        let eigs = symmetric_eigenvalues(&gram);
        let sigma_min = eigs[0].max(0.0).sqrt();

        hull.push(hull_inradius);
        ellipsoid.push(ellipsoid_inradius);
        sigma.push(sigma_min);
    }

    let mut max_mismatch = 0.0f64;
    for (e, sg) in ellipsoid.iter().zip(&sigma) {
        if *sg > 0.0 {
            max_mismatch = max_mismatch.max((e - sg).abs() / sg);
        }
    }
    let ratios: Vec<f64> = hull.iter().map(|h| h / width.mean).collect();
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    Ok(ContainmentReport {
        s,
        direction_count,
        trials,
        width_mean: width.mean,
        hull_inradii: hull,
        ellipsoid_inradii: ellipsoid,
        sigma_mins: sigma,
        max_spectral_mismatch: max_mismatch,
        min_ratio,
        max_ratio,
    })
}
