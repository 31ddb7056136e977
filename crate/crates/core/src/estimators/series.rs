//! Day-by-day estimates for portfolios drawn from a fixed set of alphas.

use super::{
    kl_pairwise, kl_spectral, new_estimators, spectral_decomposition, EstimatorId, EstimatorInputs, SpectralMatrix,
};
use crate::alpha::PositionPanel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::market_data::ReturnsPanel;
use crate::statistics::{
    alpha_pnl, alpha_stats, correlation, rolling_covariance, rolling_mean,
    sample_covariance, AlphaStats, CovKind, CovarianceMatrix, StdConvention,
};
use crate::turnover::moment_turnover;

/// Alphas evaluated on one market, restricted to the days on which every
/// alpha has both a turnover and a PnL value.
#[derive(Clone, Debug)]
pub struct AlphaSet {
    names: Vec<String>,
    days: Vec<usize>,
    turnover: Vec<Vec<f64>>,
    pnl: Vec<Vec<f64>>,
    /// Per alpha, `a(d) - a(d-1)` for each common day (rows) and asset.
    deltas: Vec<Matrix>,
    full_cov: CovarianceMatrix,
}

impl AlphaSet {
    /// Builds the set over panel days in `span` (all days when `None`).
    pub fn new(
        names: Vec<String>,
        panels: &[PositionPanel],
        returns: &ReturnsPanel,
        span: Option<std::ops::Range<usize>>,
    ) -> Result<Self> {
        if names.len() != panels.len() || panels.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} names for {} panels",
                names.len(),
                panels.len()
            )));
        }
        let p = panels[0].days();
        let span = span.unwrap_or(0..p);
        let mut tau_by_day = vec![vec![f64::NAN; p]; panels.len()];
        let mut pnl_by_day = vec![vec![f64::NAN; p]; panels.len()];
        for (k, panel) in panels.iter().enumerate() {
            if panel.days() != p {
                return Err(Error::ShapeMismatch("position panels differ in length".into()));
            }
            let t = moment_turnover(panel)?;
            for (d, v) in t.days.iter().zip(t.tau) {
                tau_by_day[k][*d] = v;
            }
            let r = alpha_pnl(panel, returns)?;
            for (d, v) in r.days.iter().zip(r.pnl) {
                pnl_by_day[k][*d] = v;
            }
        }
        let days: Vec<usize> = span
            .filter(|&d| d < p)
            .filter(|&d| {
                (0..panels.len()).all(|k| !tau_by_day[k][d].is_nan() && !pnl_by_day[k][d].is_nan())
            })
            .collect();
        if days.len() < 2 {
            return Err(Error::InsufficientHistory {
                needed: 2,
                available: days.len(),
            });
        }
        let pick = |v: &Vec<f64>| days.iter().map(|&d| v[d]).collect::<Vec<f64>>();
        let turnover: Vec<Vec<f64>> = tau_by_day.iter().map(pick).collect();
        let pnl: Vec<Vec<f64>> = pnl_by_day.iter().map(pick).collect();
        let s = panels[0].assets();
        let deltas = panels
            .iter()
            .map(|panel| {
                let mut m = Matrix::zeros(days.len(), s);
                for (t, &d) in days.iter().enumerate() {
                    let cur = panel.positions().row(d);
                    let prev = panel.positions().row(d - 1);
                    for (o, (a, b)) in m.row_mut(t).iter_mut().zip(cur.iter().zip(prev)) {
                        *o = a - b;
                    }
                }
                m
            })
            .collect();
        let refs: Vec<&[f64]> = pnl.iter().map(|v| v.as_slice()).collect();
        let full_cov = sample_covariance(&refs)?;
        Ok(Self {
            names,
            days,
            turnover,
            pnl,
            deltas,
            full_cov,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Panel day indices of the common days.
    pub fn days(&self) -> &[usize] {
        &self.days
    }

    pub fn turnover(&self, k: usize) -> &[f64] {
        &self.turnover[k]
    }

    pub fn pnl(&self, k: usize) -> &[f64] {
        &self.pnl[k]
    }

    /// Covariance of alpha returns over all common days.
    pub fn full_covariance(&self) -> &CovarianceMatrix {
        &self.full_cov
    }

    pub fn stats(&self, conv: StdConvention) -> Result<Vec<AlphaStats>> {
        (0..self.len())
            .map(|k| alpha_stats(&self.pnl[k], &self.turnover[k], conv))
            .collect()
    }

    /// Exact daily turnover of the portfolio `sum_j x_j A_{idx_j}`.
    pub fn real_turnover(&self, idx: &[usize], x: &[f64]) -> Vec<f64> {
        let s = self.deltas[0].cols();
        let mut acc = vec![0.0; s];
        (0..self.days.len())
            .map(|t| {
                acc.fill(0.0);
                for (&k, &w) in idx.iter().zip(x) {
                    for (a, d) in acc.iter_mut().zip(self.deltas[k].row(t)) {
                        *a += w * d;
                    }
                }
                acc.iter().map(|v| v.abs()).sum()
            })
            .collect()
    }
}

/// Trailing-window mean turnovers and return covariances of an
/// [`AlphaSet`], indexed by common-day position.
#[derive(Clone, Debug)]
pub struct RollingStats {
    window: usize,
    tau_mean: Vec<Vec<f64>>,
    cov: Vec<Option<CovarianceMatrix>>,
}

impl RollingStats {
    pub fn new(set: &AlphaSet, window: usize) -> Result<Self> {
        let refs: Vec<&[f64]> = set.pnl.iter().map(|v| v.as_slice()).collect();
        let cov = rolling_covariance(&refs, window)?;
        let tau_mean = set.turnover.iter().map(|t| rolling_mean(t, window)).collect();
        Ok(Self {
            window,
            tau_mean,
            cov,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// First common-day position with a full window.
    pub fn first(&self) -> usize {
        self.window - 1
    }

    pub fn tau_mean(&self, k: usize, t: usize) -> f64 {
        self.tau_mean[k][t]
    }

    pub fn covariance(&self, t: usize) -> Option<&CovarianceMatrix> {
        self.cov[t].as_ref()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EstimateOptions {
    pub spectral: SpectralMatrix,
    /// When set, the theoretical estimate is produced with this ratio.
    pub kappa: Option<f64>,
}

/// Per-day estimates aligned with the real portfolio turnover. Undefined
/// values are `NaN`.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSeries {
    /// Panel day indices.
    pub days: Vec<usize>,
    pub real: Vec<f64>,
    /// `KlPair` for two alphas, `KlSpectral` otherwise.
    pub kl_id: EstimatorId,
    pub kl: Vec<f64>,
    pub theoretical: Option<Vec<f64>>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub t3: Vec<f64>,
    pub t4: Vec<f64>,
    pub tmax: Vec<f64>,
}

impl EstimateSeries {
    pub fn column(&self, id: EstimatorId) -> Option<&[f64]> {
        match id {
            EstimatorId::KlPair | EstimatorId::KlSpectral if id == self.kl_id => Some(&self.kl),
            EstimatorId::KlPair | EstimatorId::KlSpectral => None,
            EstimatorId::Theoretical => self.theoretical.as_deref(),
            EstimatorId::T1 => Some(&self.t1),
            EstimatorId::T2 => Some(&self.t2),
            EstimatorId::T3 => Some(&self.t3),
            EstimatorId::T4 => Some(&self.t4),
            EstimatorId::Tmax => Some(&self.tmax),
        }
    }

    /// Estimator columns in report order.
    pub fn columns(&self) -> Vec<(EstimatorId, &[f64])> {
        let mut out = vec![(self.kl_id, self.kl.as_slice())];
        if let Some(t) = &self.theoretical {
            out.push((EstimatorId::Theoretical, t));
        }
        out.extend([
            (EstimatorId::T1, self.t1.as_slice()),
            (EstimatorId::T2, self.t2.as_slice()),
            (EstimatorId::T3, self.t3.as_slice()),
            (EstimatorId::T4, self.t4.as_slice()),
            (EstimatorId::Tmax, self.tmax.as_slice()),
        ]);
        out
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Estimates for the portfolio `sum_j x_j A_{idx_j}` on every common day
/// with a full rolling window.
///
/// The mean-ratio estimates use the trailing window's mean turnovers and
/// covariance. The KL estimate uses the same trailing mean turnovers with
/// the whole-span return covariance. `tmax` uses same-day alpha turnovers.
pub fn estimate_series(
    set: &AlphaSet,
    rolling: &RollingStats,
    idx: &[usize],
    x: &[f64],
    opts: &EstimateOptions,
) -> Result<EstimateSeries> {
    let n = idx.len();
    if n < 2 || x.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "portfolio needs >= 2 alphas with matching weights, got {n} and {}",
            x.len()
        )));
    }
    if let Some(&bad) = idx.iter().find(|&&k| k >= set.len()) {
        return Err(Error::InvalidArgument(format!("alpha index {bad} out of range")));
    }
    let first = rolling.first();
    if set.days.len() <= first {
        return Err(Error::InsufficientHistory {
            needed: first + 1,
            available: set.days.len(),
        });
    }

    let full = CovarianceMatrix {
        matrix: set.full_cov.matrix.select(idx),
        kind: CovKind::Covariance,
    };
    let (kl_id, rho, eig) = if n == 2 {
        let r = correlation(&full).matrix[(0, 1)];
        if r.is_nan() {
            return Err(Error::Undefined("pair correlation undefined (zero variance)".into()));
        }
        (EstimatorId::KlPair, r, None)
    } else {
        let m = match opts.spectral {
            SpectralMatrix::Covariance => full.matrix.clone(),
            SpectralMatrix::Correlation => {
                let c = correlation(&full).matrix;
                if c.as_slice().iter().any(|v| v.is_nan()) {
                    return Err(Error::Undefined("correlation undefined (zero variance)".into()));
                }
                c
            }
        };
        (EstimatorId::KlSpectral, f64::NAN, Some(spectral_decomposition(&m)?))
    };

    let real_all = set.real_turnover(idx, x);
    let len = set.days.len() - first;
    let mut out = EstimateSeries {
        days: set.days[first..].to_vec(),
        real: real_all[first..].to_vec(),
        kl_id,
        kl: Vec::with_capacity(len),
        theoretical: opts.kappa.map(|_| Vec::with_capacity(len)),
        t1: Vec::with_capacity(len),
        t2: Vec::with_capacity(len),
        t3: Vec::with_capacity(len),
        t4: Vec::with_capacity(len),
        tmax: Vec::with_capacity(len),
    };
    let mut taus = vec![0.0; n];
    for t in first..set.days.len() {
        for (j, &k) in idx.iter().enumerate() {
            taus[j] = rolling.tau_mean(k, t);
        }
        out.kl.push(match &eig {
            None => kl_pairwise(taus[0], taus[1], x[0], x[1], rho)?,
            Some(e) => kl_spectral(&taus, x, e)?,
        });
        let cov = rolling
            .covariance(t)
            .ok_or_else(|| Error::Undefined(format!("no rolling covariance at {t}")))?;
        let inputs = EstimatorInputs::new(x.to_vec(), taus.clone(), cov.matrix.select(idx))?;
        match new_estimators(&inputs) {
            Ok(e) => {
                out.t1.push(e.t1);
                out.t2.push(e.t2);
                out.t3.push(e.t3.unwrap_or(f64::NAN));
                out.t4.push(e.t4);
            }
            Err(Error::Undefined(_)) => {
                for col in [&mut out.t1, &mut out.t2, &mut out.t3, &mut out.t4] {
                    col.push(f64::NAN);
                }
            }
            Err(e) => return Err(e),
        }
        if let (Some(col), Some(k)) = (out.theoretical.as_mut(), opts.kappa) {
            col.push(k * inputs.sigma());
        }
        out.tmax
            .push(idx.iter().zip(x).map(|(&k, w)| w.abs() * set.turnover[k][t]).sum());
    }
    Ok(out)
}
