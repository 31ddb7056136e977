//! Per-alpha performance characteristics, covariance of alpha returns and
//! its eigensystem.

mod covariance;
mod eigen;

pub use covariance::{
    correlation, rolling_covariance, rolling_mean, sample_covariance, whiten, CovKind,
    CovarianceMatrix,
};
pub use eigen::{eigendecompose, EigenDecomposition};

use crate::alpha::PositionPanel;
use crate::error::{Error, Result};
use crate::market_data::ReturnsPanel;
use crate::turnover::TurnoverSeries;

/// Trading days per year used to annualize the Sharpe ratio.
pub const TRADING_DAYS: f64 = 252.0;

/// Normalization of the PnL standard deviation over `N` daily values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StdConvention {
    /// Divisor `N - 1` around the sample mean (the unbiased estimator).
    #[default]
    Paper,
    /// Divisor `N`.
    Textbook,
}

impl StdConvention {
    pub fn name(self) -> &'static str {
        match self {
            StdConvention::Paper => "paper",
            StdConvention::Textbook => "textbook",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(StdConvention::Paper),
            "textbook" => Some(StdConvention::Textbook),
            _ => None,
        }
    }
}

/// Daily returns of one alpha: `pnl[j]` is earned on day index `days[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PnlSeries {
    pub days: Vec<usize>,
    pub pnl: Vec<f64>,
}

impl PnlSeries {
    pub fn len(&self) -> usize {
        self.pnl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pnl.is_empty()
    }

    /// Running sum of PnL.
    pub fn cumulative(&self) -> Vec<f64> {
        self.pnl
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

/// `PnL(d) = sum_i return_i(d) * a_i(d-1)`; positions of day `d - 1` earn the
/// returns of day `d`.
pub fn alpha_pnl(positions: &PositionPanel, returns: &ReturnsPanel) -> Result<PnlSeries> {
    let p = positions.days();
    if returns.matrix().rows() + 1 != p || returns.assets() != positions.assets() {
        return Err(Error::ShapeMismatch(format!(
            "positions {}x{} vs returns {}x{}",
            p,
            positions.assets(),
            returns.matrix().rows(),
            returns.assets()
        )));
    }
    let mut days = Vec::new();
    let mut pnl = Vec::new();
    for d in 1..p {
        let Some(prev) = positions.day(d - 1) else {
            continue;
        };
        let mut sum = 0.0;
        let mut ok = true;
        for (&a, &r) in prev.iter().zip(returns.on_day(d)) {
            if a == 0.0 {
                continue;
            }
            if r.is_nan() {
                ok = false;
                break;
            }
            sum += a * r;
        }
        if ok {
            days.push(d);
            pnl.push(sum);
        }
    }
    Ok(PnlSeries { days, pnl })
}

/// Standard deviation of daily PnL under `conv`; `None` with fewer than two
/// values.
pub fn std_pnl(values: &[f64], conv: StdConvention) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    if values.iter().all(|&v| v == values[0]) {
        return Some(0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let div = match conv {
        StdConvention::Paper => n - 1,
        StdConvention::Textbook => n,
    };
    Some((ss / div as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaStats {
    pub cum_pnl: f64,
    /// Undefined when `std_pnl` is zero.
    pub sharpe: Option<f64>,
    pub std_pnl: f64,
    pub mean_turnover: f64,
    /// `mean_turnover / std_pnl`; undefined when `std_pnl` is zero.
    pub ratio: Option<f64>,
}

pub fn alpha_stats(pnl: &[f64], turnover: &[f64], conv: StdConvention) -> Result<AlphaStats> {
    if pnl.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: pnl.len(),
        });
    }
    if turnover.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: 1,
            available: 0,
        });
    }
    let cum_pnl: f64 = pnl.iter().sum();
    let std = std_pnl(pnl, conv).expect("at least two values");
    let mean_turnover = turnover.iter().sum::<f64>() / turnover.len() as f64;
    let positive = std > 0.0;
    Ok(AlphaStats {
        cum_pnl,
        sharpe: positive.then(|| TRADING_DAYS.sqrt() / pnl.len() as f64 * cum_pnl / std),
        std_pnl: std,
        mean_turnover,
        ratio: positive.then(|| mean_turnover / std),
    })
}

/// [`alpha_stats`] restricted to the days where both series are defined.
pub fn alpha_stats_aligned(
    pnl: &PnlSeries,
    turnover: &TurnoverSeries,
    conv: StdConvention,
) -> Result<AlphaStats> {
    let (mut p, mut t) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < pnl.days.len() && j < turnover.days.len() {
        match pnl.days[i].cmp(&turnover.days[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                p.push(pnl.pnl[i]);
                t.push(turnover.tau[j]);
                i += 1;
                j += 1;
            }
        }
    }
    alpha_stats(&p, &t, conv)
}
