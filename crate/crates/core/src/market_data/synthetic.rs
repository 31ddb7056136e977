use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::OhlcvPanel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Parameters of the synthetic geometric random-walk market.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Daily log drift.
    pub drift: f64,
    /// Daily log-return volatility.
    pub volatility: f64,
    /// Share of return variance explained by a common market factor, in [0, 1].
    pub market_share: f64,
    /// Average starting price; each asset draws its own within a factor of 2.
    pub start_price: f64,
    /// Mean daily volume in shares.
    pub volume_mean: f64,
    /// Log-normal dispersion of daily volume.
    pub volume_dispersion: f64,
    pub start_date: NaiveDate,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            drift: 0.0002,
            volatility: 0.02,
            market_share: 0.3,
            start_price: 50.0,
            volume_mean: 1.0e6,
            volume_dispersion: 0.4,
            start_date: NaiveDate::from_ymd_opt(2018, 1, 2).expect("valid date"),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub(crate) fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

/// Generates a `days × assets` panel; identical seeds give identical panels.
pub fn generate_synthetic(
    seed: u64,
    days: usize,
    assets: usize,
    spec: &SyntheticSpec,
) -> Result<OhlcvPanel> {
    if days < 2 || assets == 0 {
        return Err(Error::InvalidShape(format!(
            "synthetic panel needs days >= 2 and assets >= 1, got {days} x {assets}"
        )));
    }
    let finite = [
        spec.drift,
        spec.volatility,
        spec.start_price,
        spec.volume_mean,
        spec.volume_dispersion,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite
        || spec.volatility < 0.0
        || spec.start_price <= 0.0
        || spec.volume_mean < 0.0
        || spec.volume_dispersion < 0.0
        || !(0.0..=1.0).contains(&spec.market_share)
    {
        return Err(Error::InvalidArgument(format!(
            "bad synthetic parameters {spec:?}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = spec.volatility;
    let beta = spec.market_share.sqrt();
    let idio = (1.0 - spec.market_share).sqrt();
    let range = 0.5 * sigma;
    let mu = spec.drift - 0.5 * sigma * sigma;

    let mut open = Matrix::zeros(days, assets);
    let mut high = Matrix::zeros(days, assets);
    let mut low = Matrix::zeros(days, assets);
    let mut close = Matrix::zeros(days, assets);
    let mut volume = Matrix::zeros(days, assets);

    let mut prev: Vec<f64> = (0..assets)
        .map(|_| spec.start_price * 2f64.powf(rng.random_range(-1.0..1.0)))
        .collect();
    for d in 0..days {
        let market = normal(&mut rng);
        for i in 0..assets {
            let shock = beta * market + idio * normal(&mut rng);
            let c = if d == 0 {
                prev[i]
            } else {
                prev[i] * (mu + sigma * shock).exp()
            };
            let o = prev[i] * (0.3 * sigma * normal(&mut rng)).exp();
            let h = o.max(c) * (range * normal(&mut rng).abs()).exp();
            let l = o.min(c) * (-range * normal(&mut rng).abs()).exp();
            let disp = spec.volume_dispersion;
            let v = (spec.volume_mean * (disp * normal(&mut rng) - 0.5 * disp * disp).exp()).round();
            open[(d, i)] = o;
            high[(d, i)] = h;
            low[(d, i)] = l;
            close[(d, i)] = c;
            volume[(d, i)] = v;
            prev[i] = c;
        }
    }

    let width = assets.to_string().len().max(3);
    let tickers = (0..assets).map(|i| format!("S{i:0width$}")).collect();
    OhlcvPanel::new(
        weekdays_from(spec.start_date, days),
        tickers,
        open,
        high,
        low,
        close,
        volume,
    )
}
