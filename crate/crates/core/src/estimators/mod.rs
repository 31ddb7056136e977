//! Covariance-based portfolio turnover estimates.
//!
//! All estimators map alpha weights `x`, alpha mean turnovers `tau` and the
//! covariance `C` of alpha returns to a turnover figure in book units.

mod series;

pub use series::{estimate_series, AlphaSet, EstimateOptions, EstimateSeries, RollingStats};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::statistics::{eigendecompose, EigenDecomposition};

/// Stable estimator identifiers used in CSV headers and on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorId {
    KlPair,
    KlSpectral,
    Theoretical,
    T1,
    T2,
    T3,
    T4,
    Tmax,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 8] = [
        EstimatorId::KlPair,
        EstimatorId::KlSpectral,
        EstimatorId::Theoretical,
        EstimatorId::T1,
        EstimatorId::T2,
        EstimatorId::T3,
        EstimatorId::T4,
        EstimatorId::Tmax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorId::KlPair => "kl_pair",
            EstimatorId::KlSpectral => "kl_spectral",
            EstimatorId::Theoretical => "theoretical",
            EstimatorId::T1 => "t1",
            EstimatorId::T2 => "t2",
            EstimatorId::T3 => "t3",
            EstimatorId::T4 => "t4",
            EstimatorId::Tmax => "tmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == name)
    }
}

impl std::fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Matrix whose eigensystem feeds the spectral estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpectralMatrix {
    Covariance,
    #[default]
    Correlation,
}

impl SpectralMatrix {
    pub fn name(self) -> &'static str {
        match self {
            SpectralMatrix::Covariance => "covariance",
            SpectralMatrix::Correlation => "correlation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "covariance" => Some(SpectralMatrix::Covariance),
            "correlation" => Some(SpectralMatrix::Correlation),
            _ => None,
        }
    }
}

/// Two-alpha estimate
/// `(1+rho)/2 (t1 x1 + t2 x2) + (1-rho)/2 |t1 x1 - t2 x2|`.
pub fn kl_pairwise(tau1: f64, tau2: f64, x1: f64, x2: f64, rho: f64) -> Result<f64> {
    if !(x1 > 0.0 && x2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pairwise estimate needs positive weights, got ({x1}, {x2})"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("correlation {rho} outside [-1, 1]")));
    }
    let (a, b) = (tau1 * x1, tau2 * x2);
    Ok(0.5 * (1.0 + rho) * (a + b) + 0.5 * (1.0 - rho) * (a - b).abs())
}

/// Spectral estimate `n^(-1/2) sum_p psi_p |sum_i V_ip tau_i |x_i||`.
pub fn kl_spectral(taus: &[f64], x: &[f64], eig: &EigenDecomposition) -> Result<f64> {
    let n = taus.len();
    if x.len() != n || eig.values.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} turnovers, {} weights, {} eigenvalues",
            n,
            x.len(),
            eig.values.len()
        )));
    }
    let total: f64 = (0..n)
        .map(|p| {
            let inner: f64 = (0..n).map(|i| eig.vectors[(i, p)] * taus[i] * x[i].abs()).sum();
            eig.values[p] * inner.abs()
        })
        .sum();
    Ok(total / (n as f64).sqrt())
}

/// Relative eigenvalue gap below which eigenvectors are treated as one
/// degenerate eigenspace by [`spectral_decomposition`].
const DEGENERATE_GAP: f64 = 1e-9;

/// Eigendecomposition feeding [`kl_spectral`].
///
/// The spectral estimate depends on the basis chosen inside a repeated
/// eigenvalue. Within each such eigenspace the basis is aligned with the
/// projection of the all-ones vector, which is the limit of adding a small
/// common correlation. For two unit-variance alphas this keeps the
/// estimate equal to [`kl_pairwise`] at `rho = 0` as well.
pub fn spectral_decomposition(c: &Matrix) -> Result<EigenDecomposition> {
    let mut eig = eigendecompose(c)?;
    let n = eig.values.len();
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eig.values[start] - eig.values[end]).abs() <= DEGENERATE_GAP * scale {
            end += 1;
        }
        let k = end - start;
        if k > 1 {
            // Overlaps of the cluster's vectors with the ones vector.
            let w: Vec<f64> = (start..end).map(|p| (0..n).map(|i| eig.vectors[(i, p)]).sum()).collect();
            let ww = Matrix::from_vec(k, k, (0..k * k).map(|j| w[j / k] * w[j % k]).collect());
            let q = eigendecompose(&ww)?.vectors;
            let old = eig.vectors.clone();
            for (a, p) in (start..end).enumerate() {
                for i in 0..n {
                    eig.vectors[(i, p)] = (0..k).map(|b| old[(i, start + b)] * q[(b, a)]).sum();
                }
            }
        }
        start = end;
    }
    Ok(eig)
}

/// Weights, mean turnovers and covariance of one portfolio.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorInputs {
    pub weights: Vec<f64>,
    pub taus: Vec<f64>,
    pub cov: Matrix,
    /// Common turnover-to-std ratio, if known.
    pub kappa: Option<f64>,
}

impl EstimatorInputs {
    pub fn new(weights: Vec<f64>, taus: Vec<f64>, cov: Matrix) -> Result<Self> {
        let n = weights.len();
        if taus.len() != n || cov.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "{} weights, {} turnovers, {}x{} covariance",
                n,
                taus.len(),
                cov.rows(),
                cov.cols()
            )));
        }
        Ok(Self {
            weights,
            taus,
            cov,
            kappa: None,
        })
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    /// Portfolio return std `sqrt(x^T C x)`.
    pub fn sigma(&self) -> f64 {
        self.cov.quadratic_form(&self.weights).max(0.0).sqrt()
    }

    pub fn stds(&self) -> Vec<f64> {
        (0..self.weights.len())
            .map(|i| self.cov[(i, i)].max(0.0).sqrt())
            .collect()
    }

    fn positive_stds(&self) -> Result<Vec<f64>> {
        let stds = self.stds();
        match stds.iter().position(|&s| !(s > 0.0)) {
            Some(i) => Err(Error::Undefined(format!("alpha {i} has zero return variance"))),
            None => Ok(stds),
        }
    }
}

/// Common ratio `tau_i / std_i` if all ratios agree to within a relative
/// `1e-9`; otherwise reports the spread.
pub fn derive_kappa(taus: &[f64], stds: &[f64]) -> Result<f64> {
    let ratios: Vec<f64> = taus.iter().zip(stds).map(|(t, s)| t / s).collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) || ratios.is_empty() {
        return Err(Error::Undefined("turnover to std ratio undefined".into()));
    }
    if min == max || (min > 0.0 && max / min <= 1.0 + 1e-9) {
        Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
    } else {
        Err(Error::NonConstantRatio {
            min,
            max,
            spread: max / min,
        })
    }
}

/// `kappa sqrt(x^T C x)`, with `kappa` supplied or derived from a constant
/// ratio.
pub fn theoretical(inputs: &EstimatorInputs) -> Result<f64> {
    let kappa = match inputs.kappa {
        Some(k) => k,
        None => derive_kappa(&inputs.taus, &inputs.positive_stds()?)?,
    };
    Ok(kappa * inputs.sigma())
}

/// The four mean-ratio estimates. `t3` is `None` when the weights sum to
/// zero; `t2` is zero when any turnover is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewEstimates {
    pub t1: f64,
    pub t2: f64,
    pub t3: Option<f64>,
    pub t4: f64,
}

pub fn new_estimators(inputs: &EstimatorInputs) -> Result<NewEstimates> {
    let stds = inputs.positive_stds()?;
    let n = stds.len() as f64;
    let sigma = inputs.sigma();
    let taus = &inputs.taus;
    let x = &inputs.weights;
    let ratios: Vec<f64> = taus.iter().zip(&stds).map(|(t, s)| t / s).collect();

    let t1 = ratios.iter().sum::<f64>() / n * sigma;
    let t2 = if ratios.iter().any(|&r| r == 0.0) {
        0.0
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / n).exp() * sigma
    };
    let xsum: f64 = x.iter().sum();
    let t3 = (xsum != 0.0)
        .then(|| x.iter().zip(&ratios).map(|(w, r)| w * r).sum::<f64>() / xsum * sigma);
    let t4 = taus.iter().sum::<f64>() / stds.iter().sum::<f64>() * sigma;
    Ok(NewEstimates { t1, t2, t3, t4 })
}
