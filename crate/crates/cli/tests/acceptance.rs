//! Acceptance suite: one check per criterion, each printing a single
//! `PASS`/`FAIL` line with its measurement. Run with
//! `cargo test -p turnover-cli --test acceptance -- --nocapture`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use turnover_core::alpha::PositionPanel;
use turnover_core::estimators::{
    kl_pairwise, kl_spectral, new_estimators, spectral_decomposition, theoretical, EstimatorId, EstimatorInputs,
};
use turnover_core::experiments::{
    metrics, run_pairs_experiment, run_sobol_experiment, stats_ratio_spread, synthetic_alpha_set, ExperimentConfig,
    MetricsTable, Rho5Mode, SobolSampler, SyntheticAlphaSpec,
};
use turnover_core::statistics::{eigendecompose, StdConvention};
use turnover_core::theory::{
    equicorrelation_matrix, proposition_counterexample, samples_covariance, standard_draws, whiten_samples,
    SampleStd,
};
use turnover_core::turnover::{combine_positions, max_turnover, max_turnover_series, moment_turnover, PortfolioWeights};
use turnover_core::Matrix;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn example_1() -> Outcome {
    let start = Instant::now();
    let a1 = PositionPanel::from_rows(&[[0.0, 500.0, -200.0, -300.0], [100.0, 100.0, 300.0, -500.0]]).unwrap();
    let a2 = PositionPanel::from_rows(&[[250.0, -400.0, 250.0, -100.0], [200.0, -300.0, 300.0, -200.0]]).unwrap();
    let t1 = moment_turnover(&a1).unwrap().tau[0];
    let t2 = moment_turnover(&a2).unwrap().tau[0];
    let port = combine_positions(&[&a1, &a2], &PortfolioWeights::new(vec![1.0, 1.0]).unwrap()).unwrap();
    let real = moment_turnover(&port).unwrap().tau[0];
    let bound = max_turnover(&[t1, t2], &[1.0, 1.0]).unwrap();
    let elapsed = start.elapsed();
    check(
        (t1, t2, bound, real) == (1200.0, 300.0, 1500.0, 1200.0) && elapsed < Duration::from_millis(1),
        format!("tau = ({t1}, {t2}), no-crossing {bound}, crossing {real}, {elapsed:?}"),
    )
}

fn estimator_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_a = 0.0f64;
    for _ in 0..10_000 {
        let (t1, t2) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let (x1, x2) = (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        let rho: f64 = rng.random_range(-1.0..=1.0);
        let (a, b): (f64, f64) = (t1 * x1, t2 * x2);
        let oracle = a.max(b) + rho * a.min(b);
        worst_a = worst_a.max((kl_pairwise(t1, t2, x1, x2, rho).unwrap() - oracle).abs());
    }
    let mut worst_b = 0.0f64;
    for k in -99..=99 {
        let rho = k as f64 / 100.0;
        let eig = spectral_decomposition(&Matrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])).unwrap();
        let (taus, x) = ([0.37, 0.81], [0.6, 0.4]);
        let spectral = kl_spectral(&taus, &x, &eig).unwrap();
        let pair = kl_pairwise(taus[0], taus[1], x[0], x[1], rho).unwrap();
        worst_b = worst_b.max((spectral - pair).abs());
    }
    let kappa = 1.3;
    let cov = Matrix::from_rows(&[vec![0.04, 0.01, -0.005], vec![0.01, 0.09, 0.02], vec![-0.005, 0.02, 0.16]]);
    let taus: Vec<f64> = (0..3).map(|i| kappa * cov[(i, i)].sqrt()).collect();
    let inputs = EstimatorInputs::new(vec![0.2, 0.5, 0.3], taus, cov).unwrap();
    let target = kappa * inputs.sigma();
    let est = new_estimators(&inputs).unwrap();
    let worst_c = [est.t1, est.t2, est.t3.unwrap(), est.t4].iter().map(|t| (t - target).abs()).fold(0.0, f64::max);
    check(
        worst_a <= 1e-12 && worst_b <= 1e-10 && worst_c <= 1e-12,
        format!("pairwise {worst_a:.1e}, spectral {worst_b:.1e}, constant ratio {worst_c:.1e}"),
    )
}

fn equicorrelation() -> Outcome {
    let kappa = 1.7;
    let (mut worst, mut distinct) = (0.0f64, true);
    for n in [2usize, 5, 10] {
        for rho in [0.0, 0.25, 0.5, 1.0] {
            let inputs = EstimatorInputs::new(vec![1.0 / n as f64; n], vec![kappa; n], equicorrelation_matrix(n, rho))
                .unwrap()
                .with_kappa(kappa);
            let q = rho + (1.0 - rho) / n as f64;
            let got = theoretical(&inputs).unwrap();
            worst = worst.max((got - kappa * q.sqrt()).abs());
            if rho != 1.0 && q < 1.0 && (got - kappa * q).abs() <= 1e-9 {
                distinct = false;
            }
        }
    }
    check(worst <= 1e-12 && distinct, format!("max error {worst:.1e}, differs from prior value: {distinct}"))
}

fn crossing_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut violations, mut never_strict) = (0usize, 0usize);
    for seed in 0..100u64 {
        let n = 2 + (seed as usize % 9);
        let spec = SyntheticAlphaSpec {
            days: 400,
            assets: 50,
            persistence: (0..n).map(|_| rng.random_range(0.0..0.98)).collect(),
            common: rng.random_range(0.0..0.8),
            volatility: 0.02,
        };
        let alphas = synthetic_alpha_set(seed, &spec).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let panels: Vec<&PositionPanel> = alphas.positions.iter().collect();
        let real = moment_turnover(&combine_positions(&panels, &PortfolioWeights::new(x.clone()).unwrap()).unwrap())
            .unwrap()
            .tau;
        let taus: Vec<Vec<f64>> = alphas.positions.iter().map(|p| moment_turnover(p).unwrap().tau).collect();
        let refs: Vec<&[f64]> = taus.iter().map(Vec::as_slice).collect();
        let bound = max_turnover_series(&refs, &x).unwrap();
        violations += real.iter().zip(&bound).filter(|(r, b)| *r > *b).count();
        if !real.iter().zip(&bound).any(|(r, b)| r < b) {
            never_strict += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && never_strict == 0 && elapsed < Duration::from_secs(10),
        format!("{violations} days above bound, {never_strict} portfolios never strictly below, {elapsed:.2?}"),
    )
}

fn proposition() -> Outcome {
    let raw = standard_draws(5, 100_000, 2);
    let white = whiten_samples(&raw).unwrap();
    let r = proposition_counterexample(&SampleStd(&white), &samples_covariance(&white).unwrap()).unwrap();
    let unwhitened = proposition_counterexample(&SampleStd(&raw), &samples_covariance(&raw).unwrap()).unwrap();
    check(
        (r.violation - 0.5).abs() <= 0.02 && (unwhitened.violation - 0.5).abs() <= 0.02,
        format!(
            "violation {:.4} (raw draws {:.4}), predicted {:.4} vs actual {:.4}",
            r.violation, unwhitened.violation, r.predicted, r.actual
        ),
    )
}

fn whitening() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut white_dev, mut recon) = (0.0f64, 0.0f64);
    for k in 0..20u64 {
        let n = rng.random_range(2..=10usize);
        let mut mix = standard_draws(100 + k, n, n);
        for i in 0..n {
            mix[(i, i)] += 2.5;
        }
        let samples = standard_draws(k, 50 * n, n).matmul(&mix);
        let cov = samples_covariance(&samples).unwrap();
        let eig = eigendecompose(&cov).unwrap();
        recon = recon.max(eig.reconstruct().max_abs_diff(&cov) / cov.max_abs());
        let w = whiten_samples(&samples).unwrap();
        white_dev = white_dev.max(samples_covariance(&w).unwrap().max_abs_diff(&Matrix::identity(n)));
    }
    check(
        white_dev <= 1e-8 && recon <= 1e-10,
        format!("identity deviation {white_dev:.1e}, reconstruction {recon:.1e}"),
    )
}

fn metrics_oracle() -> Outcome {
    let real: [f64; 3] = [0.10, 0.20, 0.15];
    let tmax = [0.18, 0.26, 0.30];
    let est = [0.12, 0.17, 0.19];
    let p = 3.0;
    let mut b = [0.0; 5];
    let mut m1 = 0.0;
    for d in 0..3 {
        b[0] += (est[d] - real[d]) / p;
        b[1] += (est[d] - real[d]).abs() / p;
        m1 += (tmax[d] - real[d]) / p;
        b[4] += (est[d] - real[d]).abs() / real[d] / p;
    }
    b[2] = b[0] / m1;
    b[3] = b[1] / m1;
    let m = metrics(&est, &real, &tmax, Rho5Mode::Mean).unwrap();
    let got = [m.rho1, m.rho2, m.rho3.unwrap(), m.rho4.unwrap(), m.rho5.unwrap()];
    let worst = got.iter().zip(b).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let t = metrics(&tmax, &real, &tmax, Rho5Mode::Mean).unwrap();
    check(
        worst <= 1e-14 && t.rho3 == Some(1.0) && t.rho4 == Some(1.0),
        format!("max error {worst:.1e}, tmax rho3 = {:?}, rho4 = {:?}", t.rho3, t.rho4),
    )
}

fn best_t_rho2(table: &MetricsTable) -> f64 {
    [EstimatorId::T1, EstimatorId::T2, EstimatorId::T3, EstimatorId::T4]
        .iter()
        .map(|&id| table.row(id).unwrap().rho2)
        .fold(f64::INFINITY, f64::min)
}

fn kl_rho2(table: &MetricsTable) -> f64 {
    table.rows[0].metrics.rho2
}

fn trend_reproduction() -> Outcome {
    let cfg = ExperimentConfig::default();
    let mut lines = Vec::new();
    let mut narrow_ok = true;
    let mut spreads_ok = true;
    for (label, spec) in [("narrow", SyntheticAlphaSpec::narrow(8)), ("wide", SyntheticAlphaSpec::wide(8))] {
        let set = synthetic_alpha_set(8, &spec).unwrap().alpha_set().unwrap();
        let (_, _, spread) = stats_ratio_spread(&set.stats(StdConvention::Paper).unwrap()).unwrap();
        let pairs = run_pairs_experiment(&set, &cfg).unwrap();
        let sobol = run_sobol_experiment(&set, 100, &cfg).unwrap();
        let holds = best_t_rho2(&pairs) <= kl_rho2(&pairs) && best_t_rho2(&sobol) <= kl_rho2(&sobol);
        if label == "narrow" {
            narrow_ok = holds;
            spreads_ok &= spread <= 1.25;
        } else {
            spreads_ok &= spread >= 4.0;
        }
        lines.push(format!(
            "{label} spread {spread:.2}: rho2 best T* {:.4}/{:.4} vs KL {:.4}/{:.4} (pairs/sobol), holds: {holds}",
            best_t_rho2(&pairs),
            best_t_rho2(&sobol),
            kl_rho2(&pairs),
            kl_rho2(&sobol)
        ));
    }
    check(narrow_ok && spreads_ok, lines.join("; "))
}

fn sobol() -> Outcome {
    let first: Vec<Vec<f64>> = SobolSampler::new(2).unwrap().take(3).collect();
    let expected = [vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75]];
    let again: Vec<Vec<f64>> = SobolSampler::new(10).unwrap().take(200).collect();
    let repeat: Vec<Vec<f64>> = SobolSampler::new(10).unwrap().take(200).collect();
    check(
        first == expected && again == repeat,
        format!("first points {first:?}, deterministic: {}", again == repeat),
    )
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli(cmd: &str, out: &Path) -> Duration {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_turnover"))
        .arg(cmd)
        .arg("--config")
        .arg(workspace_root().join("configs/synthetic.toml"))
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    assert!(status.status.success(), "{cmd}: {}", String::from_utf8_lossy(&status.stderr));
    start.elapsed()
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut total = Duration::ZERO;
    for cmd in ["stats", "series", "pairs", "sobol"] {
        total += cli(cmd, &a);
    }
    for cmd in ["pairs", "sobol"] {
        cli(cmd, &b);
    }
    let same = ["pairs.csv", "sobol.csv"]
        .iter()
        .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    check(
        same && total < Duration::from_secs(60),
        format!("byte-identical: {same}, full pipeline {total:.2?}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 example-1 golden", example_1),
        ("2 estimator identities", estimator_identities),
        ("3 equicorrelation closed form", equicorrelation),
        ("4 crossing bound", crossing_bound),
        ("5 proposition violation", proposition),
        ("6 whitening", whitening),
        ("7 metrics oracle", metrics_oracle),
        ("8 trend reproduction", trend_reproduction),
        ("9 sobol", sobol),
        ("10 end-to-end determinism", end_to_end),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
