//! Error metrics of turnover estimates and the pairs / Sobol portfolio
//! experiments built on them.

mod report;
mod sobol;
mod synthetic;

pub use report::{table_csv, table_markdown};
pub use sobol::{SobolSampler, MAX_DIMENSION};
pub use synthetic::{synthetic_alpha_set, SyntheticAlphaSpec, SyntheticAlphas};

use crate::error::{Error, Result};
use crate::estimators::{estimate_series, AlphaSet, EstimateOptions, EstimateSeries, EstimatorId, RollingStats};
use crate::statistics::AlphaStats;
use crate::turnover::PortfolioWeights;

/// How daily relative errors are aggregated into `rho5`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Rho5Mode {
    #[default]
    Mean,
    Sum,
}

impl Rho5Mode {
    pub fn name(self) -> &'static str {
        match self {
            Rho5Mode::Mean => "mean",
            Rho5Mode::Sum => "sum",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "mean" => Some(Rho5Mode::Mean),
            "sum" => Some(Rho5Mode::Sum),
            _ => None,
        }
    }
}

/// The five error metrics of one estimate against real turnover.
///
/// `rho3` and `rho4` are undefined when the no-crossing bound has zero mean
/// error, and `rho5` when real turnover is zero on every day.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: Option<f64>,
    pub rho4: Option<f64>,
    pub rho5: Option<f64>,
    /// Days entering `rho1`, `rho2`.
    pub days: usize,
    /// Days left out of `rho5` because real turnover was zero.
    pub zero_turnover_days: usize,
}

/// Computes the metrics over days where `estimate` is finite.
pub fn metrics(estimate: &[f64], real: &[f64], tmax: &[f64], mode: Rho5Mode) -> Result<Metrics> {
    if estimate.len() != real.len() || tmax.len() != real.len() {
        return Err(Error::ShapeMismatch(format!(
            "series lengths {}, {}, {}",
            estimate.len(),
            real.len(),
            tmax.len()
        )));
    }
    let (mut e1, mut e2, mut m1) = (0.0, 0.0, 0.0);
    let (mut rel, mut rel_days, mut zero_days, mut days) = (0.0, 0usize, 0usize, 0usize);
    for ((&est, &tau), &bound) in estimate.iter().zip(real).zip(tmax) {
        if !est.is_finite() {
            continue;
        }
        days += 1;
        e1 += est - tau;
        e2 += (est - tau).abs();
        m1 += bound - tau;
        if tau == 0.0 {
            zero_days += 1;
        } else {
            rel += (est - tau).abs() / tau;
            rel_days += 1;
        }
    }
    if days == 0 {
        return Err(Error::NoDefinedDays);
    }
    let p = days as f64;
    let (rho1, rho2, max1) = (e1 / p, e2 / p, m1 / p);
    let ratio = |v: f64| (max1 != 0.0).then(|| v / max1);
    let rho5 = (rel_days > 0).then(|| match mode {
        Rho5Mode::Mean => rel / rel_days as f64,
        Rho5Mode::Sum => rel,
    });
    Ok(Metrics {
        rho1,
        rho2,
        rho3: ratio(rho1),
        rho4: ratio(rho2),
        rho5,
        days,
        zero_turnover_days: zero_days,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub estimator: EstimatorId,
    pub metrics: Metrics,
}

/// Metrics averaged over portfolios, one row per estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    /// Portfolios that entered the averages.
    pub portfolios: usize,
    /// Portfolios left out, with the reason.
    pub excluded: Vec<(String, String)>,
}

impl MetricsTable {
    pub fn row(&self, id: EstimatorId) -> Option<&Metrics> {
        self.rows.iter().find(|r| r.estimator == id).map(|r| &r.metrics)
    }
}

/// Which metrics are replaced by their absolute value before averaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbsPolicy {
    /// `rho1` and `rho3` only.
    SignedRatios,
    /// Every metric.
    All,
}

/// Per-portfolio metric rows in report order, excluding the theoretical
/// estimate.
pub fn series_metrics(series: &EstimateSeries, mode: Rho5Mode) -> Result<Vec<MetricsRow>> {
    series
        .columns()
        .into_iter()
        .filter(|(id, _)| *id != EstimatorId::Theoretical)
        .map(|(id, col)| {
            Ok(MetricsRow {
                estimator: id,
                metrics: metrics(col, &series.real, &series.tmax, mode)?,
            })
        })
        .collect()
}

/// Averages per-portfolio rows; optional metrics average over the
/// portfolios where they are defined.
pub fn average_rows(per_portfolio: &[Vec<MetricsRow>], policy: AbsPolicy) -> Result<Vec<MetricsRow>> {
    let first = per_portfolio.first().ok_or(Error::NoDefinedDays)?;
    let mut out = Vec::with_capacity(first.len());
    for (j, head) in first.iter().enumerate() {
        let ms: Vec<Metrics> = per_portfolio
            .iter()
            .map(|rows| {
                let r = &rows[j];
                debug_assert_eq!(r.estimator, head.estimator);
                let mut m = r.metrics;
                m.rho1 = m.rho1.abs();
                m.rho3 = m.rho3.map(f64::abs);
                if policy == AbsPolicy::All {
                    m.rho2 = m.rho2.abs();
                    m.rho4 = m.rho4.map(f64::abs);
                    m.rho5 = m.rho5.map(f64::abs);
                }
                m
            })
            .collect();
        let n = ms.len() as f64;
        let avg_opt = |f: fn(&Metrics) -> Option<f64>| {
            let vals: Vec<f64> = ms.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        out.push(MetricsRow {
            estimator: head.estimator,
            metrics: Metrics {
                rho1: ms.iter().map(|m| m.rho1).sum::<f64>() / n,
                rho2: ms.iter().map(|m| m.rho2).sum::<f64>() / n,
                rho3: avg_opt(|m| m.rho3),
                rho4: avg_opt(|m| m.rho4),
                rho5: avg_opt(|m| m.rho5),
                days: ms.iter().map(|m| m.days).sum(),
                zero_turnover_days: ms.iter().map(|m| m.zero_turnover_days).sum(),
            },
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub window: usize,
    pub estimate: EstimateOptions,
    pub rho5: Rho5Mode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            window: 250,
            estimate: EstimateOptions::default(),
            rho5: Rho5Mode::Mean,
        }
    }
}

#[cfg(feature = "parallel")]
fn map_units<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_units<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

fn assemble(
    results: Vec<(String, Result<Vec<MetricsRow>>)>,
    policy: AbsPolicy,
) -> Result<MetricsTable> {
    let mut ok = Vec::new();
    let mut excluded = Vec::new();
    for (label, r) in results {
        match r {
            Ok(rows) => ok.push(rows),
            Err(e) => excluded.push((label, e.to_string())),
        }
    }
    if ok.is_empty() {
        let why = excluded
            .first()
            .map(|(l, e)| format!("{l}: {e}"))
            .unwrap_or_default();
        return Err(Error::Undefined(format!("no portfolio could be evaluated ({why})")));
    }
    Ok(MetricsTable {
        rows: average_rows(&ok, policy)?,
        portfolios: ok.len(),
        excluded,
    })
}

/// Every unordered pair at weights `(1/2, 1/2)`; `|rho1|` and `|rho3|` are
/// averaged over pairs.
pub fn run_pairs_experiment(set: &AlphaSet, cfg: &ExperimentConfig) -> Result<MetricsTable> {
    let n = set.len();
    if n < 2 {
        return Err(Error::InvalidArgument("pairs experiment needs at least two alphas".into()));
    }
    let rolling = RollingStats::new(set, cfg.window)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results = map_units(&pairs, |&(i, j)| {
        let label = format!("{}+{}", set.names()[i], set.names()[j]);
        let r = estimate_series(set, &rolling, &[i, j], &[0.5, 0.5], &cfg.estimate)
            .and_then(|s| series_metrics(&s, cfg.rho5));
        (label, r)
    });
    assemble(results, AbsPolicy::SignedRatios)
}

/// Weights of the first `count` Sobol portfolios, normalized to sum 1.
pub fn sobol_weights(n: usize, count: usize) -> Result<Vec<PortfolioWeights>> {
    SobolSampler::new(n)?
        .take(count)
        .map(|p| PortfolioWeights::normalized(&p))
        .collect()
}

/// `count` portfolios of all alphas with Sobol weights; absolute values of
/// every metric are averaged over portfolios.
pub fn run_sobol_experiment(set: &AlphaSet, count: usize, cfg: &ExperimentConfig) -> Result<MetricsTable> {
    let n = set.len();
    if n < 2 {
        return Err(Error::InvalidArgument("Sobol experiment needs at least two alphas".into()));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("Sobol portfolio count must be positive".into()));
    }
    let rolling = RollingStats::new(set, cfg.window)?;
    let weights = sobol_weights(n, count)?;
    let idx: Vec<usize> = (0..n).collect();
    let numbered: Vec<(usize, &PortfolioWeights)> = weights.iter().enumerate().collect();
    let results = map_units(&numbered, |&(k, w)| {
        let r = estimate_series(set, &rolling, &idx, w.as_slice(), &cfg.estimate)
            .and_then(|s| series_metrics(&s, cfg.rho5));
        (format!("sobol#{}", k + 1), r)
    });
    assemble(results, AbsPolicy::All)
}

/// `(min, max, max / min)` of the turnover-to-std ratios.
pub fn ratio_spread(ratios: &[f64]) -> Result<(f64, f64, f64)> {
    if ratios.is_empty() || ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Undefined(format!("ratios {ratios:?} not all positive")));
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max, max / min))
}

/// [`ratio_spread`] over alpha statistics.
pub fn stats_ratio_spread(stats: &[AlphaStats]) -> Result<(f64, f64, f64)> {
    let ratios: Option<Vec<f64>> = stats.iter().map(|s| s.ratio).collect();
    ratio_spread(&ratios.ok_or_else(|| Error::Undefined("alpha with zero PnL variance".into()))?)
}
