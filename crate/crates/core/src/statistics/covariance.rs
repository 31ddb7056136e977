//! Sample covariance of aligned return series, full-span and rolling, and
//! the whitening transform.

use super::eigen::eigendecompose;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovKind {
    Covariance,
    Correlation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Matrix,
    pub kind: CovKind,
}

impl CovarianceMatrix {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// `sqrt(C_ii)`.
    pub fn std(&self, i: usize) -> f64 {
        self.matrix[(i, i)].max(0.0).sqrt()
    }

    pub fn stds(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.std(i)).collect()
    }
}

fn check_series(series: &[&[f64]], min_len: usize) -> Result<usize> {
    let len = series
        .first()
        .ok_or_else(|| Error::InvalidArgument("no series".into()))?
        .len();
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::ShapeMismatch("series of unequal length".into()));
    }
    if len < min_len {
        return Err(Error::InsufficientHistory {
            needed: min_len,
            available: len,
        });
    }
    Ok(len)
}

/// Unbiased (`m - 1`) sample covariance of equally long series.
pub fn sample_covariance(series: &[&[f64]]) -> Result<CovarianceMatrix> {
    let m = check_series(series, 2)?;
    let n = series.len();
    let means: Vec<f64> = series.iter().map(|s| s.iter().sum::<f64>() / m as f64).collect();
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = series[i]
                .iter()
                .zip(series[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / (m - 1) as f64;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(CovarianceMatrix {
        matrix: c,
        kind: CovKind::Covariance,
    })
}

/// Correlation matrix of `cov`. Rows and columns of zero-variance series are
/// `NaN`.
pub fn correlation(cov: &CovarianceMatrix) -> CovarianceMatrix {
    if cov.kind == CovKind::Correlation {
        return cov.clone();
    }
    let n = cov.n();
    let std = cov.stds();
    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = if std[i] > 0.0 && std[j] > 0.0 {
                if i == j {
                    1.0
                } else {
                    (cov.matrix[(i, j)] / (std[i] * std[j])).clamp(-1.0, 1.0)
                }
            } else {
                f64::NAN
            };
        }
    }
    CovarianceMatrix {
        matrix: r,
        kind: CovKind::Correlation,
    }
}

/// Trailing mean over `w` values ending at each index; `NaN` before `w - 1`.
pub fn rolling_mean(values: &[f64], w: usize) -> Vec<f64> {
    assert!(w >= 1, "window must be positive");
    let mut out = vec![f64::NAN; values.len()];
    let mut sum = 0.0;
    for (t, &v) in values.iter().enumerate() {
        sum += v;
        if t >= w {
            sum -= values[t - w];
        }
        if t + 1 >= w {
            // refresh the running sum once per window to bound drift
            if (t + 1) % w == 0 {
                sum = values[t + 1 - w..=t].iter().sum();
            }
            out[t] = sum / w as f64;
        }
    }
    out
}

/// Covariance over the trailing window of `w` observations ending at each
/// index `t` (inclusive); `None` for `t < w - 1`.
///
/// Updated incrementally from running sums of values and cross products,
/// recomputed from scratch every `w` steps.
pub fn rolling_covariance(series: &[&[f64]], w: usize) -> Result<Vec<Option<CovarianceMatrix>>> {
    if w < 2 {
        return Err(Error::InvalidArgument(format!("rolling window {w} < 2")));
    }
    let m = check_series(series, w)?;
    let n = series.len();
    let mut sum = vec![0.0; n];
    let mut cross = Matrix::zeros(n, n);
    let mut out = Vec::with_capacity(m);

    let refresh = |t: usize, sum: &mut Vec<f64>, cross: &mut Matrix| {
        let lo = t + 1 - w;
        for i in 0..n {
            sum[i] = series[i][lo..=t].iter().sum();
            for j in i..n {
                let v: f64 = (lo..=t).map(|k| series[i][k] * series[j][k]).sum();
                cross[(i, j)] = v;
                cross[(j, i)] = v;
            }
        }
    };

    for t in 0..m {
        if t + 1 < w {
            out.push(None);
            continue;
        }
        if (t + 1 - w) % w == 0 {
            refresh(t, &mut sum, &mut cross);
        } else {
            let old = t - w;
            for i in 0..n {
                sum[i] += series[i][t] - series[i][old];
                for j in i..n {
                    let v = cross[(i, j)] + series[i][t] * series[j][t] - series[i][old] * series[j][old];
                    cross[(i, j)] = v;
                    cross[(j, i)] = v;
                }
            }
        }
        let wf = w as f64;
        let mut c = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (cross[(i, j)] - sum[i] * sum[j] / wf) / (wf - 1.0);
                let v = if i == j { v.max(0.0) } else { v };
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        out.push(Some(CovarianceMatrix {
            matrix: c,
            kind: CovKind::Covariance,
        }));
    }
    Ok(out)
}

/// Decorrelates `series` to unit variance: returns `(A x, A)` with
/// `A = diag(psi)^(-1/2) V^T` from the eigensystem of their covariance.
///
/// Fails with the near-null direction when the covariance is degenerate
/// (smallest eigenvalue at most `1e-12` of the largest).
pub fn whiten(series: &[&[f64]]) -> Result<(Vec<Vec<f64>>, Matrix)> {
    let cov = sample_covariance(series)?;
    let eig = eigendecompose(&cov.matrix)?;
    let n = eig.values.len();
    let (max, min) = (eig.values[0], eig.values[n - 1]);
    if !(max > 0.0) || min <= 1e-12 * max {
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        return Err(Error::DegenerateCovariance {
            direction: eig.vector(n - 1),
            ratio,
        });
    }
    let mut a = Matrix::zeros(n, n);
    for p in 0..n {
        let scale = 1.0 / eig.values[p].sqrt();
        for i in 0..n {
            a[(p, i)] = scale * eig.vectors[(i, p)];
        }
    }
    Ok((apply(&a, series), a))
}

/// `y_p(t) = sum_i a[p][i] x_i(t)`.
pub fn apply(a: &Matrix, series: &[&[f64]]) -> Vec<Vec<f64>> {
    let m = series.first().map_or(0, |s| s.len());
    (0..a.rows())
        .map(|p| {
            (0..m)
                .map(|t| (0..a.cols()).map(|i| a[(p, i)] * series[i][t]).sum())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|s| s.as_slice()).collect()
    }

    fn normals(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m).map(|_| StandardNormal.sample(rng)).collect()
    }

    /// Direct double loop over the definition.
    fn brute_cov(x: &[f64], y: &[f64]) -> f64 {
        let m = x.len() as f64;
        let mut s = 0.0;
        for a in 0..x.len() {
            for b in 0..x.len() {
                s += (x[a] - x[b]) * (y[a] - y[b]);
            }
        }
        s / (2.0 * m * (m - 1.0))
    }

    #[test]
    fn five_point_fixture() {
        let x = [0.01, -0.02, 0.03, 0.0, 0.015];
        let y = [0.02, 0.01, -0.01, 0.005, 0.0];
        let c = sample_covariance(&[&x, &y]).unwrap();
        let both: [&[f64]; 2] = [&x, &y];
        for (i, a) in both.iter().enumerate() {
            for (j, b) in both.iter().enumerate() {
                assert!((c.matrix[(i, j)] - brute_cov(a, b)).abs() < 1e-17);
            }
        }
    }

    #[test]
    fn identical_and_opposite_series() {
        let x = [0.3, -0.1, 0.2, 0.05];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let same = correlation(&sample_covariance(&[&x, &x]).unwrap());
        assert!((same.matrix[(0, 1)] - 1.0).abs() < 1e-15);
        let eig = eigendecompose(&sample_covariance(&[&x, &x]).unwrap().matrix).unwrap();
        assert!(eig.values[1].abs() < 1e-15 * eig.values[0]);
        let opp = correlation(&sample_covariance(&[&x, &neg]).unwrap());
        assert!((opp.matrix[(0, 1)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn correlation_of_constant_is_nan() {
        let (x, y): (&[f64], &[f64]) = (&[1.0, 1.0, 1.0], &[1.0, 2.0, 4.0]);
        let r = correlation(&sample_covariance(&[x, y]).unwrap());
        assert!(r.matrix[(0, 1)].is_nan() && r.matrix[(0, 0)].is_nan());
        assert_eq!(r.matrix[(1, 1)], 1.0);
    }

    #[test]
    fn insufficient_history() {
        assert!(sample_covariance(&[&[1.0]]).is_err());
        assert!(rolling_covariance(&[&[1.0, 2.0]], 3).is_err());
        assert!(rolling_covariance(&[&[1.0, 2.0]], 1).is_err());
    }

    #[test]
    fn rolling_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<Vec<f64>> = (0..3)
            .map(|_| normals(&mut rng, 700).iter().map(|v| 0.01 * v + 0.002).collect())
            .collect();
        let s = refs(&data);
        let w = 250;
        let roll = rolling_covariance(&s, w).unwrap();
        assert!(roll[..w - 1].iter().all(Option::is_none));
        for (t, c) in roll.iter().enumerate().skip(w - 1) {
            let win: Vec<&[f64]> = s.iter().map(|x| &x[t + 1 - w..=t]).collect();
            let batch = sample_covariance(&win).unwrap();
            let c = c.as_ref().unwrap();
            assert!(
                c.matrix.max_abs_diff(&batch.matrix) <= 1e-10 * batch.matrix.max_abs(),
                "day {t}"
            );
        }
        let means = rolling_mean(&data[0], w);
        for t in w - 1..700 {
            let direct = data[0][t + 1 - w..=t].iter().sum::<f64>() / w as f64;
            assert!((means[t] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn whitening_correlated_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z1 = normals(&mut rng, 2000);
        let z2 = normals(&mut rng, 2000);
        let rho: f64 = 0.9;
        let x2: Vec<f64> = z1
            .iter()
            .zip(&z2)
            .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
            .collect();
        let (out, a) = whiten(&[&z1, &x2]).unwrap();
        let c = sample_covariance(&refs(&out)).unwrap();
        assert!(c.matrix.max_abs_diff(&Matrix::identity(2)) <= 1e-8);
        assert_eq!(a.shape(), (2, 2));
    }

    #[test]
    fn whitening_white_input_is_signed_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let raw: Vec<Vec<f64>> = (0..3).map(|_| normals(&mut rng, 500)).collect();
        let (white, _) = whiten(&refs(&raw)).unwrap();
        let (again, a) = whiten(&refs(&white)).unwrap();
        for p in 0..3 {
            let row = a.row(p);
            let big = row.iter().filter(|v| v.abs() > 0.5).count();
            assert_eq!(big, 1);
            assert!(row.iter().all(|v| v.abs() < 1e-8 || (v.abs() - 1.0).abs() < 1e-8));
        }
        let c = sample_covariance(&refs(&again)).unwrap();
        assert!(c.matrix.max_abs_diff(&Matrix::identity(3)) <= 1e-8);
    }

    #[test]
    fn duplicated_series_is_degenerate() {
        let x = [0.1, 0.4, -0.2, 0.3, 0.0];
        match whiten(&[&x, &x]) {
            Err(Error::DegenerateCovariance { direction, .. }) => {
                let h = 0.5f64.sqrt();
                assert!((direction[0].abs() - h).abs() < 1e-8);
                assert!((direction[0] + direction[1]).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn covariance_transforms_congruently(seed in any::<u64>(), n in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<Vec<f64>> = (0..n).map(|_| normals(&mut rng, 60)).collect();
            let mut a = Matrix::zeros(3, n);
            for r in 0..3 {
                for c in 0..n {
                    a[(r, c)] = rng.random_range(-2.0..2.0);
                }
            }
            let c = sample_covariance(&refs(&data)).unwrap().matrix;
            let lhs = sample_covariance(&refs(&apply(&a, &refs(&data)))).unwrap().matrix;
            let rhs = a.matmul(&c).matmul(&a.transpose());
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-8 * rhs.max_abs().max(1e-300));
        }
    }
}
