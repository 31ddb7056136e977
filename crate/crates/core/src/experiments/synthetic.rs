//! Synthetic alpha sets with a controlled spread of turnover-to-risk
//! ratios.
//!
//! Each alpha trades on an AR(1) signal per asset. The persistence `phi`
//! sets its turnover (roughly proportional to `sqrt(1 - phi)`) while the
//! return risk of a normalized book stays about the same, so the spread of
//! `phi` across alphas controls the spread of `T / stdPnL`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::alpha::{positions_from_signal, PositionPanel};
use crate::error::{Error, Result};
use crate::estimators::AlphaSet;
use crate::linalg::Matrix;
use crate::market_data::{weekdays_from, ReturnsPanel, SyntheticSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticAlphaSpec {
    pub days: usize,
    pub assets: usize,
    /// Signal persistence per alpha, each in `[0, 1)`.
    pub persistence: Vec<f64>,
    /// Share of signal innovations common to all alphas, in `[0, 1]`.
    pub common: f64,
    /// Daily return volatility of every asset.
    pub volatility: f64,
}

impl SyntheticAlphaSpec {
    fn spaced(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n)
            .map(|k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect()
    }

    /// Persistences within `[0.90, 0.92]`: ratios agree to a few percent.
    pub fn narrow(n: usize) -> Self {
        Self {
            days: 1000,
            assets: 50,
            persistence: Self::spaced(n, 0.90, 0.92),
            common: 0.3,
            volatility: 0.02,
        }
    }

    /// Persistences from 0 to 0.97: ratios differ several times over.
    pub fn wide(n: usize) -> Self {
        Self {
            persistence: Self::spaced(n, 0.0, 0.97),
            ..Self::narrow(n)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.persistence.len() < 2 || self.assets < 2 || self.days < 3 {
            return Err(Error::InvalidArgument(format!(
                "need >= 2 alphas, >= 2 assets and >= 3 days, got {}, {}, {}",
                self.persistence.len(),
                self.assets,
                self.days
            )));
        }
        if let Some(phi) = self.persistence.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("persistence {phi} outside [0, 1)")));
        }
        if !(0.0..=1.0).contains(&self.common) || !(self.volatility > 0.0) {
            return Err(Error::InvalidArgument("common share or volatility out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticAlphas {
    pub names: Vec<String>,
    pub positions: Vec<PositionPanel>,
    pub returns: ReturnsPanel,
}

impl SyntheticAlphas {
    pub fn alpha_set(&self) -> Result<AlphaSet> {
        AlphaSet::new(self.names.clone(), &self.positions, &self.returns, None)
    }
}

pub fn synthetic_alpha_set(seed: u64, spec: &SyntheticAlphaSpec) -> Result<SyntheticAlphas> {
    spec.validate()?;
    let (p, s) = (spec.days, spec.assets);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let returns = Matrix::from_vec(p - 1, s, (0..(p - 1) * s).map(|_| spec.volatility * normal()).collect());

    let n = spec.persistence.len();
    let (wc, wi) = (spec.common.sqrt(), (1.0 - spec.common).sqrt());
    let mut signals: Vec<Matrix> = vec![Matrix::zeros(p, s); n];
    for d in 0..p {
        for i in 0..s {
            let shared = normal();
            for (k, &phi) in spec.persistence.iter().enumerate() {
                let e = wc * shared + wi * normal();
                signals[k][(d, i)] = if d == 0 {
                    e / (1.0 - phi * phi).sqrt()
                } else {
                    phi * signals[k][(d - 1, i)] + e
                };
            }
        }
    }
    let positions = signals
        .iter()
        .map(|raw| positions_from_signal(raw, &[]))
        .collect::<Result<Vec<_>>>()?;
    let dates = weekdays_from(SyntheticSpec::default().start_date, p);
    Ok(SyntheticAlphas {
        names: (1..=n).map(|k| format!("alpha{k}")).collect(),
        positions,
        returns: ReturnsPanel::from_matrix(dates[1..].to_vec(), returns)?,
    })
}
