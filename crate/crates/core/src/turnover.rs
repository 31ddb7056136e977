//! Portfolio combination with crossing of trades, exact daily turnover and
//! the no-crossing bound.

use crate::alpha::{DayStatus, PositionPanel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Finite, not-all-zero alpha weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioWeights(Vec<f64>);

impl PortfolioWeights {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) || x.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and not all zero, got {x:?}"
            )));
        }
        Ok(Self(x))
    }

    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Scales `x` so that its entries sum to one.
    pub fn normalized(x: &[f64]) -> Result<Self> {
        let sum: f64 = x.iter().sum();
        if sum == 0.0 || !sum.is_finite() {
            return Err(Error::InvalidArgument(format!("weights {x:?} sum to {sum}")));
        }
        Self::new(x.iter().map(|v| v / sum).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Daily moment turnover `tau[j]` for day index `days[j]` (the move from
/// `days[j] - 1` to `days[j]`).
#[derive(Clone, Debug, PartialEq)]
pub struct TurnoverSeries {
    pub days: Vec<usize>,
    pub tau: Vec<f64>,
    pub mean: f64,
}

/// Sums weighted positions per asset. A day is defined only when every
/// constituent is defined. The result is not renormalized.
pub fn combine_positions(panels: &[&PositionPanel], weights: &PortfolioWeights) -> Result<PositionPanel> {
    let first = panels
        .first()
        .ok_or_else(|| Error::InvalidArgument("no panels to combine".into()))?;
    if panels.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} panels but {} weights",
            panels.len(),
            weights.len()
        )));
    }
    let (p, s) = (first.days(), first.assets());
    if let Some(bad) = panels.iter().find(|q| (q.days(), q.assets()) != (p, s)) {
        return Err(Error::ShapeMismatch(format!(
            "panel {}x{} does not match {p}x{s}",
            bad.days(),
            bad.assets()
        )));
    }
    let mut out = Matrix::zeros(p, s);
    let mut status = vec![DayStatus::Undefined; p];
    for d in 0..p {
        if !panels.iter().all(|q| q.is_defined(d)) {
            continue;
        }
        let row = out.row_mut(d);
        for (q, &x) in panels.iter().zip(weights.as_slice()) {
            for (acc, &a) in row.iter_mut().zip(q.positions().row(d)) {
                *acc += x * a;
            }
        }
        status[d] = if row.iter().all(|&v| v == 0.0) {
            DayStatus::Flat
        } else {
            DayStatus::Active
        };
    }
    if status.iter().all(|&st| st == DayStatus::Undefined) {
        return Err(Error::NoDefinedDays);
    }
    PositionPanel::new(out, status)
}

/// `tau(d) = sum_i |a_i(d) - a_i(d-1)|` over consecutive defined days.
pub fn moment_turnover(panel: &PositionPanel) -> Result<TurnoverSeries> {
    let mut days = Vec::new();
    let mut tau = Vec::new();
    for d in 1..panel.days() {
        if let (Some(prev), Some(cur)) = (panel.day(d - 1), panel.day(d)) {
            days.push(d);
            tau.push(cur.iter().zip(prev).map(|(a, b)| (a - b).abs()).sum());
        }
    }
    if tau.is_empty() {
        let available = (0..panel.days()).filter(|&d| panel.is_defined(d)).count();
        return Err(Error::InsufficientHistory { needed: 2, available });
    }
    let mean = tau.iter().sum::<f64>() / tau.len() as f64;
    Ok(TurnoverSeries { days, tau, mean })
}

/// Turnover without crossing: `sum_k |x_k| tau_k`.
pub fn max_turnover(taus: &[f64], x: &[f64]) -> Result<f64> {
    if taus.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} turnovers but {} weights",
            taus.len(),
            x.len()
        )));
    }
    Ok(taus.iter().zip(x).map(|(t, w)| w.abs() * t).sum())
}

/// Day-by-day [`max_turnover`]; `series[k][j]` is alpha `k` on day `j`.
pub fn max_turnover_series(series: &[&[f64]], x: &[f64]) -> Result<Vec<f64>> {
    if series.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} series but {} weights",
            series.len(),
            x.len()
        )));
    }
    let len = series.first().map_or(0, |s| s.len());
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::ShapeMismatch("turnover series of unequal length".into()));
    }
    Ok((0..len)
        .map(|j| series.iter().zip(x).map(|(s, w)| w.abs() * s[j]).sum())
        .collect())
}
