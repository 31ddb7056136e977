//! Cyclic Jacobi eigensolver for small symmetric matrices.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order; column `p` of `vectors` belongs to
/// `values[p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for p in 0..n {
            let lam = self.values[p];
            for i in 0..n {
                let vi = self.vectors[(i, p)] * lam;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, p)];
                }
            }
        }
        out
    }

    pub fn vector(&self, p: usize) -> Vec<f64> {
        self.vectors.column(p)
    }
}

pub fn eigendecompose(c: &Matrix) -> Result<EigenDecomposition> {
    if !c.is_square() {
        return Err(Error::InvalidShape(format!("{}x{} is not square", c.rows(), c.cols())));
    }
    let n = c.rows();
    let norm = c.max_abs();
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let diff = (c[(i, j)] - c[(j, i)]).abs();
            if diff > 1e-12 * norm {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }

    let mut a = c.clone();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = 1e-13 * norm;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max(a[(i, j)].abs()));
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() > threshold {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut big = 0;
        for i in 1..n {
            if v[(i, k)].abs() > v[(big, k)].abs() {
                big = i;
            }
        }
        let sign = if v[(big, k)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[(i, k)];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// One Jacobi rotation zeroing `a[p][q]`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r != p && r != q {
            let arp = a[(r, p)];
            let arq = a[(r, q)];
            let np = arp - s * (arq + tau * arp);
            let nq = arq + s * (arp - tau * arq);
            a[(r, p)] = np;
            a[(p, r)] = np;
            a[(r, q)] = nq;
            a[(q, r)] = nq;
        }
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}
