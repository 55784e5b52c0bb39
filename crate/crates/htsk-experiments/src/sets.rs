//! Samplers for the point sets the experiments run on: balls, spheres,
//! separated sphere samples, and the symmetric sets fed to the
//! containment experiment.

use htsk::geomlib::PointSet;
use htsk::randkit::{sample_sphere, StreamHandle};
use htsk::{Error, Result};

/// Uniform sample from the unit ball: a uniform direction scaled by
/// `u^(1/n)` so the radial density matches the ball volume element.
pub fn sample_ball(stream: &mut StreamHandle, dim: usize) -> Result<Vec<f64>> {
    let dir = sample_sphere(stream, dim)?;
    let u = stream.next_f64();
    let r = u.powf(1.0 / dim as f64);
    Ok(dir.into_iter().map(|v| v * r).collect())
}

/// `count` uniform points in the radius-`radius` ball.
pub fn ball_points(
    stream: &mut StreamHandle,
    dim: usize,
    count: usize,
    radius: f64,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| Ok(sample_ball(stream, dim)?.into_iter().map(|v| v * radius).collect()))
        .collect()
}

/// `count` uniform points on the radius-`radius` sphere.
pub fn sphere_points(
    stream: &mut StreamHandle,
    dim: usize,
    count: usize,
    radius: f64,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| Ok(sample_sphere(stream, dim)?.into_iter().map(|v| v * radius).collect()))
        .collect()
}

/// Unit-sphere sample thinned so every surviving pair is at least
/// `min_dist` apart. Candidates are drawn until `count` survive; errors
/// if the cap cannot be met within `64 * count` draws (the separation
/// demanded is too large for the dimension).
pub fn separated_sphere_sample(
    stream: &mut StreamHandle,
    dim: usize,
    count: usize,
    min_dist: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let budget = 64 * count.max(1);
    while kept.len() < count {
        if attempts >= budget {
            return Err(Error::InvalidArgument(format!(
                "could not place {count} points at pairwise distance {min_dist} in dimension {dim} \
                 within {budget} draws"
            )));
        }
        attempts += 1;
        let cand = sample_sphere(stream, dim)?;
        let ok = kept.iter().all(|p| dist(p, &cand) >= min_dist);
        if ok {
            kept.push(cand);
        }
    }
    Ok(kept)
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Symmetrized sphere sample: `half` uniform points plus their antipodes,
/// wrapped as a `PointSet` with the exact radius 1.
pub fn symmetric_sphere_set(stream: &mut StreamHandle, dim: usize, half: usize) -> Result<PointSet> {
    let mut points = Vec::with_capacity(2 * half);
    for _ in 0..half {
        let p = sample_sphere(stream, dim)?;
        let neg: Vec<f64> = p.iter().map(|v| -v).collect();
        points.push(p);
        points.push(neg);
    }
    PointSet::new(points)
}
