//! Time-series operators applied column by column (one column per asset).
//! Undefined cells are `NaN` and poison every window that contains them.

use crate::linalg::Matrix;

#[inline]
pub(crate) fn defined(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

pub fn delay(x: &Matrix, k: usize) -> Matrix {
    let (p, s) = x.shape();
    let mut out = Matrix::filled(p, s, f64::NAN);
    for d in k..p {
        out.row_mut(d).copy_from_slice(x.row(d - k));
    }
    out
}

/// Trailing sum over `k` days including the current one.
pub fn rolling_sum(x: &Matrix, k: usize) -> Matrix {
    assert!(k >= 1, "window must be positive");
    let (p, s) = x.shape();
    let mut out = Matrix::filled(p, s, f64::NAN);
    for d in (k - 1)..p {
        for i in 0..s {
            out[(d, i)] = defined((d + 1 - k..=d).map(|t| x[(t, i)]).sum());
        }
    }
    out
}

/// Trailing Pearson correlation over `k` days; undefined where either
/// input is constant inside the window.
pub fn rolling_correlation(x: &Matrix, y: &Matrix, k: usize) -> Matrix {
    assert!(k >= 1, "window must be positive");
    assert_eq!(x.shape(), y.shape());
    let (p, s) = x.shape();
    let mut out = Matrix::filled(p, s, f64::NAN);
    let mut xs = vec![0.0; k];
    let mut ys = vec![0.0; k];
    for d in (k - 1)..p {
        for i in 0..s {
            for (j, t) in (d + 1 - k..=d).enumerate() {
                xs[j] = x[(t, i)];
                ys[j] = y[(t, i)];
            }
            out[(d, i)] = pearson(&xs, &ys);
        }
    }
    out
}

pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in xs.iter().zip(ys) {
        let (da, db) = (a - mx, b - my);
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return f64::NAN;
    }
    defined((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Relative strength index of the last `k` one-day changes ending at the
/// last element of `window` (which must hold `k + 1` values), using simple
/// averages of gains and losses.
pub fn rsi_window(window: &[f64]) -> f64 {
    let k = window.len() - 1;
    let (mut gain, mut loss) = (0.0, 0.0);
    for w in window.windows(2) {
        let change = w[1] - w[0];
        if change > 0.0 {
            gain += change;
        } else {
            loss -= change;
        }
    }
    if !(gain.is_finite() && loss.is_finite()) {
        return f64::NAN;
    }
    let (avg_gain, avg_loss) = (gain / k as f64, loss / k as f64);
    if avg_loss == 0.0 {
        100.0
    } else if avg_gain == 0.0 {
        0.0
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// RSI of one series; the first `k` entries are undefined.
pub fn rsi(series: &[f64], k: usize) -> Vec<f64> {
    assert!(k >= 1, "window must be positive");
    let mut out = vec![f64::NAN; series.len()];
    for d in k..series.len() {
        out[d] = rsi_window(&series[d - k..=d]);
    }
    out
}

pub fn rolling_rsi(x: &Matrix, k: usize) -> Matrix {
    let (p, s) = x.shape();
    let mut out = Matrix::filled(p, s, f64::NAN);
    for i in 0..s {
        for (d, v) in rsi(&x.column(i), k).into_iter().enumerate() {
            out[(d, i)] = v;
        }
    }
    out
}

/// Linearly decaying average of the last `k` rows, weights `k, k-1, …, 1`.
pub fn decay(x: &Matrix, k: usize) -> Matrix {
    assert!(k >= 1, "window must be positive");
    let (p, s) = x.shape();
    let norm = (k * (k + 1) / 2) as f64;
    let mut out = Matrix::filled(p, s, f64::NAN);
    for d in (k - 1)..p {
        for i in 0..s {
            let acc: f64 = (0..k).map(|j| (k - j) as f64 * x[(d - j, i)]).sum();
            out[(d, i)] = defined(acc / norm);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec())
    }

    #[test]
    fn rsi_monotone_series() {
        let up: Vec<f64> = (0..30).map(|i| 10.0 + i as f64).collect();
        assert!(rsi(&up, 14)[14..].iter().all(|&r| r == 100.0));
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(rsi(&down, 14)[14..].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rsi_alternating_changes_is_fifty() {
        let series: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 10.0 } else { 11.0 }).collect();
        let out = rsi(&series, 14);
        assert!(out[..14].iter().all(|v| v.is_nan()));
        for r in &out[14..] {
            assert!((r - 50.0).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn rsi_stays_in_range() {
        let series = [5.0, 5.5, 5.2, 5.9, 6.3, 6.1, 5.8, 6.6, 6.4, 7.0];
        for r in rsi(&series, 4).into_iter().skip(4) {
            assert!((0.0..=100.0).contains(&r));
        }
    }

    #[test]
    fn identities() {
        let x = col(&[1.0, 4.0, 2.0, 8.0, 5.0, 7.0]);
        assert_eq!(delay(&x, 0), x);
        assert_eq!(rolling_sum(&x, 1), x);
        let c = rolling_correlation(&x, &x, 3);
        for d in 2..6 {
            assert!((c[(d, 0)] - 1.0).abs() < 1e-12);
        }
        assert!(c[(1, 0)].is_nan());
    }

    #[test]
    fn sums_and_delays() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let s = rolling_sum(&x, 2);
        assert!(s[(0, 0)].is_nan());
        assert_eq!(s.column(0)[1..], [3.0, 5.0, 7.0]);
        let d = delay(&x, 2);
        assert_eq!(d.column(0)[2..], [1.0, 2.0]);
    }

    #[test]
    fn correlation_of_constant_is_undefined() {
        let x = col(&[1.0, 1.0, 1.0, 1.0]);
        let y = col(&[1.0, 2.0, 3.0, 5.0]);
        assert!(rolling_correlation(&x, &y, 3).column(0).iter().all(|v| v.is_nan()));
    }

    #[test]
    fn nan_poisons_windows() {
        let x = col(&[1.0, f64::NAN, 3.0, 4.0, 5.0]);
        let s = rolling_sum(&x, 2);
        assert!(s[(1, 0)].is_nan() && s[(2, 0)].is_nan());
        assert_eq!(s[(3, 0)], 7.0);
    }

    #[test]
    fn linear_decay_weights() {
        let x = col(&[3.0, 6.0, 9.0]);
        let d = decay(&x, 3);
        // (3*9 + 2*6 + 1*3) / 6
        assert_eq!(d[(2, 0)], 7.0);
    }
}
