//! Numerical checks of the covariance-based turnover model: admissibility
//! of return samples, whitening, the constant-ratio condition, and the
//! failure of the pairwise composition rule on uncorrelated returns.
//!
//! Random variables in the span of an `n`-vector of returns are represented
//! by their coefficient vectors `c`; a covariance matrix `C` gives their
//! variance `c^T C c` and pairwise correlations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimators::{kl_pairwise, theoretical, AlphaSet, EstimatorInputs};
use crate::linalg::Matrix;
use crate::statistics::{eigendecompose, sample_covariance, whiten};

/// An absolutely homogeneous functional on linear combinations of returns.
pub trait PortfolioFunctional {
    fn value(&self, c: &[f64]) -> f64;
}

/// Unbiased sample std of `samples * c`, with `samples` holding one draw
/// per row.
pub struct SampleStd<'a>(pub &'a Matrix);

impl PortfolioFunctional for SampleStd<'_> {
    fn value(&self, c: &[f64]) -> f64 {
        let xs: Vec<f64> = (0..self.0.rows())
            .map(|r| self.0.row(r).iter().zip(c).map(|(a, b)| a * b).sum())
            .collect();
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)).sqrt()
    }
}

pub struct Scaled<F>(pub f64, pub F);

impl<F: PortfolioFunctional> PortfolioFunctional for Scaled<F> {
    fn value(&self, c: &[f64]) -> f64 {
        self.0 * self.1.value(c)
    }
}

/// Mean daily turnover of the portfolio `sum_k c_k A_k` over an alpha set.
pub struct PortfolioTurnover<'a>(pub &'a AlphaSet);

impl PortfolioFunctional for PortfolioTurnover<'_> {
    fn value(&self, c: &[f64]) -> f64 {
        let idx: Vec<usize> = (0..self.0.len()).collect();
        let tau = self.0.real_turnover(&idx, c);
        tau.iter().sum::<f64>() / tau.len() as f64
    }
}

/// The identically zero functional.
pub struct Zero;

impl PortfolioFunctional for Zero {
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// Draws per row, unbiased covariance over rows.
pub fn samples_covariance(samples: &Matrix) -> Result<Matrix> {
    let cols: Vec<Vec<f64>> = (0..samples.cols()).map(|j| samples.column(j)).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    Ok(sample_covariance(&refs)?.matrix)
}

/// `m` iid standard normal draws of an `n`-vector.
pub fn standard_draws(seed: u64, m: usize, n: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_vec(m, n, (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect())
}

/// Rescales each column to unit sample variance.
pub fn standardize(samples: &Matrix) -> Result<Matrix> {
    let cov = samples_covariance(samples)?;
    let mut out = samples.clone();
    for j in 0..samples.cols() {
        let sd = cov[(j, j)].sqrt();
        if !(sd > 0.0) {
            return Err(Error::Undefined(format!("column {j} is constant")));
        }
        for r in 0..samples.rows() {
            out[(r, j)] /= sd;
        }
    }
    Ok(out)
}

/// Whitened copy of the samples: unit sample covariance.
pub fn whiten_samples(samples: &Matrix) -> Result<Matrix> {
    let cols: Vec<Vec<f64>> = (0..samples.cols()).map(|j| samples.column(j)).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let (white, _) = whiten(&refs)?;
    let rows: Vec<Vec<f64>> = (0..samples.rows())
        .map(|r| white.iter().map(|col| col[r]).collect())
        .collect();
    Ok(Matrix::from_rows(&rows))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleTolerance {
    /// Allowed deviation of each sample variance from 1.
    pub variance: f64,
    /// Minimum eigenvalue relative to the maximum.
    pub eigen_ratio: f64,
}

impl Default for AdmissibleTolerance {
    fn default() -> Self {
        Self {
            variance: 1e-8,
            eigen_ratio: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleReport {
    pub max_variance_error: f64,
    pub min_eigen_ratio: f64,
    pub variance_ok: bool,
    /// Unit combination with (near) zero variance, when one exists.
    pub degenerate_direction: Option<Vec<f64>>,
}

impl AdmissibleReport {
    pub fn pass(&self) -> bool {
        self.variance_ok && self.degenerate_direction.is_none()
    }
}

pub fn check_admissible(samples: &Matrix, tol: AdmissibleTolerance) -> Result<AdmissibleReport> {
    let (m, n) = samples.shape();
    if n < 2 || m <= n {
        return Err(Error::InvalidShape(format!("need n >= 2 and more draws than components, got {m}x{n}")));
    }
    let cov = samples_covariance(samples)?;
    let max_variance_error = (0..n).map(|i| (cov[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
    let eig = eigendecompose(&cov)?;
    let (top, low) = (eig.values[0], eig.values[n - 1]);
    let min_eigen_ratio = if top > 0.0 { low / top } else { 0.0 };
    Ok(AdmissibleReport {
        max_variance_error,
        min_eigen_ratio,
        variance_ok: max_variance_error <= tol.variance,
        degenerate_direction: (min_eigen_ratio <= tol.eigen_ratio).then(|| eig.vector(n - 1)),
    })
}

fn variance(cov: &Matrix, c: &[f64]) -> f64 {
    cov.quadratic_form(c)
}

fn corr(cov: &Matrix, a: &[f64], b: &[f64]) -> Result<f64> {
    let (va, vb) = (variance(cov, a), variance(cov, b));
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::Undefined("degenerate combination".into()));
    }
    let cab: f64 = a.iter().zip(cov.mat_vec(b)).map(|(x, y)| x * y).sum();
    Ok((cab / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Basis vectors followed by `extra` random unit vectors.
pub fn probe_combinations(seed: u64, n: usize, extra: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.push(v.iter().map(|x| x / norm).collect());
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpreadReport {
    /// `f(c) / sqrt(D(c))` per combination.
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

/// Evaluates `f(c) / sqrt(c^T C c)` over the combinations. A constant ratio
/// is necessary for any covariance-based formula to give `f` exactly.
pub fn verify_theorem_condition(
    f: &dyn PortfolioFunctional,
    cov: &Matrix,
    combos: &[Vec<f64>],
) -> Result<SpreadReport> {
    let ratios = combos
        .iter()
        .map(|c| {
            let v = variance(cov, c);
            if v > 0.0 {
                Ok(f.value(c) / v.sqrt())
            } else {
                Err(Error::Undefined(format!("combination {c:?} has zero variance")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SpreadReport {
        spread: max / min,
        ratios,
        min,
        max,
    })
}

/// `|f(c1 + c2) - f(c1) sqrt((C11 + 2 C12 + C22) / C11)|` where `C` is the
/// covariance of the two combinations. Zero whenever `f` is a multiple of
/// the std.
pub fn step0_residual(f: &dyn PortfolioFunctional, cov: &Matrix, c1: &[f64], c2: &[f64]) -> f64 {
    let sum: Vec<f64> = c1.iter().zip(c2).map(|(a, b)| a + b).collect();
    let c11 = variance(cov, c1);
    let c22 = variance(cov, c2);
    let c12: f64 = c1.iter().zip(cov.mat_vec(c2)).map(|(x, y)| x * y).sum();
    (f.value(&sum) - f.value(c1) * ((c11 + 2.0 * c12 + c22) / c11).sqrt()).abs()
}

/// The pairwise rule `max + rho * min` applied to two combinations.
pub fn composition_prediction(f: &dyn PortfolioFunctional, cov: &Matrix, c1: &[f64], c2: &[f64]) -> Result<f64> {
    kl_pairwise(f.value(c1), f.value(c2), 1.0, 1.0, corr(cov, c1, c2)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropositionReport {
    /// Rule predictions for `a1 + a2` and `a1 - a2`.
    pub predicted_sum: f64,
    pub predicted_diff: f64,
    /// Rule prediction for `2 a1` composed from the two predictions above.
    pub predicted: f64,
    pub actual: f64,
    /// `|actual - predicted| / actual`, zero when both vanish.
    pub violation: f64,
}

/// Largest deviation of the samples' covariance from identity accepted by
/// [`proposition_counterexample`].
pub const IDENTITY_TOLERANCE: f64 = 0.05;

/// Chains the pairwise rule through `a1 + a2`, `a1 - a2` and their sum
/// `2 a1`. For `f = std` on uncorrelated unit returns the rule predicts 1
/// where the truth is 2.
pub fn proposition_counterexample(f: &dyn PortfolioFunctional, cov: &Matrix) -> Result<PropositionReport> {
    let n = cov.rows();
    if n < 2 || !cov.is_square() {
        return Err(Error::InvalidShape(format!("need a square covariance of size >= 2, got {:?}", cov.shape())));
    }
    let dev = cov.max_abs_diff(&Matrix::identity(n));
    if dev > IDENTITY_TOLERANCE {
        return Err(Error::InvalidArgument(format!("covariance is {dev} away from identity; whiten first")));
    }
    let basis = |i: usize| -> Vec<f64> { (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect() };
    // Order so that f(a1) >= f(a2).
    let (mut a1, mut a2) = (basis(0), basis(1));
    if f.value(&a1) < f.value(&a2) {
        std::mem::swap(&mut a1, &mut a2);
    }
    let plus: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
    let minus: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x - y).collect();
    let minus_a2: Vec<f64> = a2.iter().map(|v| -v).collect();
    let predicted_sum = composition_prediction(f, cov, &a1, &a2)?;
    let predicted_diff = composition_prediction(f, cov, &a1, &minus_a2)?;
    let predicted = kl_pairwise(predicted_sum, predicted_diff, 1.0, 1.0, corr(cov, &plus, &minus)?)?;
    let twice: Vec<f64> = a1.iter().map(|v| 2.0 * v).collect();
    let actual = f.value(&twice);
    let violation = if actual == 0.0 && predicted == 0.0 {
        0.0
    } else {
        (actual - predicted).abs() / actual.abs()
    };
    Ok(PropositionReport {
        predicted_sum,
        predicted_diff,
        predicted,
        actual,
        violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquicorrelationComparison {
    /// `kappa (rho + (1 - rho) / n)`, from repeated pairwise composition.
    pub prior: f64,
    /// `kappa sqrt(rho + (1 - rho) / n)`.
    pub closed_form: f64,
    /// The theoretical estimator on the explicit equal-weight portfolio.
    pub from_matrix: f64,
}

pub fn equicorrelation_matrix(n: usize, rho: f64) -> Matrix {
    Matrix::from_vec(
        n,
        n,
        (0..n * n).map(|k| if k / n == k % n { 1.0 } else { rho }).collect(),
    )
}

pub fn compare_equicorrelation(kappa: f64, rho: f64, n: usize) -> Result<EquicorrelationComparison> {
    if !(0.0..=1.0).contains(&rho) || n < 2 {
        return Err(Error::InvalidArgument(format!("need rho in [0, 1] and n >= 2, got {rho}, {n}")));
    }
    let q = rho + (1.0 - rho) / n as f64;
    let inputs = EstimatorInputs::new(vec![1.0 / n as f64; n], vec![kappa; n], equicorrelation_matrix(n, rho))?
        .with_kappa(kappa);
    Ok(EquicorrelationComparison {
        prior: kappa * q,
        closed_form: kappa * q.sqrt(),
        from_matrix: theoretical(&inputs)?,
    })
}

/// One line of the theory report.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryCheck {
    pub name: &'static str,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl TheoryCheck {
    pub fn pass(&self) -> bool {
        (self.measured - self.expected).abs() <= self.tolerance
    }
}

/// Runs every check on seeded draws of `m` observations.
pub fn run_theory_checks(seed: u64, m: usize, n: usize) -> Result<Vec<TheoryCheck>> {
    let raw = standard_draws(seed, m, n);
    let mut mixing = standard_draws(seed ^ 0x5eed, n, n);
    for i in 0..n {
        mixing[(i, i)] += 2.0;
    }
    let correlated = raw.matmul(&mixing);
    let admissible = check_admissible(&standardize(&correlated)?, AdmissibleTolerance::default())?;
    let white = whiten_samples(&correlated)?;
    let white_cov = samples_covariance(&white)?;
    let cov = samples_covariance(&correlated)?;
    let eig = eigendecompose(&cov)?;
    let recon = eig.reconstruct().max_abs_diff(&cov) / cov.max_abs();

    let combos = probe_combinations(seed, n, 20);
    let std_spread = verify_theorem_condition(&SampleStd(&correlated), &cov, &combos)?;
    let scaled = verify_theorem_condition(&Scaled(3.0, SampleStd(&correlated)), &cov, &combos)?;
    let step0 = step0_residual(&SampleStd(&correlated), &cov, &combos[n], &combos[n + 1]);
    let prop = proposition_counterexample(&SampleStd(&raw), &samples_covariance(&raw)?)?;
    let eq = compare_equicorrelation(1.0, 0.25, 4)?;

    let check = |name, measured, expected, tolerance| TheoryCheck {
        name,
        measured,
        expected,
        tolerance,
    };
    Ok(vec![
        check("admissible_pass", admissible.pass() as u8 as f64, 1.0, 0.0),
        check("whitening_identity_deviation", white_cov.max_abs_diff(&Matrix::identity(n)), 0.0, 1e-8),
        check("eigen_reconstruction_error", recon, 0.0, 1e-10),
        check("std_ratio_spread", std_spread.spread, 1.0, 1e-12),
        check("scaled_std_ratio", scaled.max, 3.0, 1e-12),
        check("step0_residual", step0, 0.0, 1e-10),
        check("proposition_violation", prop.violation, 0.5, 0.02),
        check("equicorrelation_prior", eq.prior, 0.4375, 1e-12),
        check("equicorrelation_theoretical", eq.from_matrix, eq.closed_form, 1e-12),
    ])
}
