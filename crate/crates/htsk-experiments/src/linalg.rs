//! Small dense linear-algebra kernels used by the experiment runners:
//! a Cholesky solve for minimum-norm interpolation through a row-restricted
//! gaussian map, and a cyclic Jacobi eigensolver for the tiny symmetric
//! matrices (`s <= 8`) that show up as projection Grams.

/// Row-major square matrix stored flat.
#[derive(Debug, Clone)]
pub struct SquareMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }
}

/// Solves `G w = rhs` for symmetric positive-definite `G` by Cholesky.
/// Returns `None` when a pivot drops below `tol` times the largest
/// diagonal entry — the caller treats that as rank deficiency, not an
/// error.
pub fn cholesky_solve(g: &SquareMatrix, rhs: &[f64], tol: f64) -> Option<Vec<f64>> {
    let k = g.dim;
    assert_eq!(rhs.len(), k, "rhs length must match the matrix dimension");
    let mut l = vec![0.0f64; k * k];
    let scale = (0..k)
        .map(|i| g.at(i, i).abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for i in 0..k {
        for j in 0..=i {
            let mut sum = g.at(i, j);
            for p in 0..j {
                sum -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if sum <= tol * scale {
                    return None;
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    // Forward then back substitution.
    let mut y = vec![0.0f64; k];
    for i in 0..k {
        let mut sum = rhs[i];
        for p in 0..i {
            sum -= l[i * k + p] * y[p];
        }
        y[i] = sum / l[i * k + i];
    }
    let mut w = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut sum = y[i];
        for p in (i + 1)..k {
            sum -= l[p * k + i] * w[p];
        }
        w[i] = sum / l[i * k + i];
    }
    Some(w)
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// returned ascending. Intended for dimensions up to a few dozen.
pub fn symmetric_eigenvalues(m: &SquareMatrix) -> Vec<f64> {
    let n = m.dim;
    let mut a = m.clone();
    for sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.at(i, j) * a.at(i, j);
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + frobenius(&a)) || sweep == 99 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.at(p, p);
                let aqq = a.at(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a.at(i, p);
                    let aiq = a.at(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
                for i in 0..n {
                    let api = a.at(p, i);
                    let aqi = a.at(q, i);
                    a.set(p, i, c * api - s * aqi);
                    a.set(q, i, s * api + c * aqi);
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.at(i, i)).collect();
    eigs.sort_unstable_by(f64::total_cmp);
    eigs
}

fn frobenius(a: &SquareMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}
