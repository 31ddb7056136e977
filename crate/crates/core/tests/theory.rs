use proptest::prelude::*;
use turnover_core::experiments::{stats_ratio_spread, synthetic_alpha_set, SyntheticAlphaSpec};
use turnover_core::statistics::{eigendecompose, StdConvention};
use turnover_core::theory::*;
use turnover_core::Matrix;

#[test]
fn turnover_ratio_at_basis_vectors_matches_alpha_ratios() {
    let spec = SyntheticAlphaSpec {
        days: 300,
        assets: 30,
        persistence: vec![0.2, 0.95],
        ..SyntheticAlphaSpec::narrow(2)
    };
    let set = synthetic_alpha_set(21, &spec).unwrap().alpha_set().unwrap();
    let stats = set.stats(StdConvention::Paper).unwrap();
    let cov = &set.full_covariance().matrix;
    let report = verify_theorem_condition(&PortfolioTurnover(&set), cov, &probe_combinations(3, 2, 0)).unwrap();
    for (r, s) in report.ratios.iter().zip(&stats) {
        assert!((r / s.ratio.unwrap() - 1.0).abs() < 1e-10);
    }
    let (_, _, spread) = stats_ratio_spread(&stats).unwrap();
    assert!(report.spread > 1.0);
    assert!((report.spread / spread - 1.0).abs() < 0.1);
}

#[test]
fn uncorrelated_draws_violate_by_about_half() {
    let s = standard_draws(1, 100_000, 2);
    let r = proposition_counterexample(&SampleStd(&s), &samples_covariance(&s).unwrap()).unwrap();
    assert!((r.violation - 0.5).abs() < 0.02, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn whitening_yields_identity(seed in any::<u64>(), n in 2usize..=10) {
        let mut mix = standard_draws(seed ^ 1, n, n);
        for i in 0..n {
            mix[(i, i)] += 3.0;
        }
        let s = standard_draws(seed, 40 * n, n).matmul(&mix);
        let cov = samples_covariance(&s).unwrap();
        let eig = eigendecompose(&cov).unwrap();
        prop_assert!(eig.reconstruct().max_abs_diff(&cov) <= 1e-10 * cov.max_abs());
        let w = whiten_samples(&s).unwrap();
        let dev = samples_covariance(&w).unwrap().max_abs_diff(&Matrix::identity(n));
        prop_assert!(dev <= 1e-8, "{}", dev);
    }
}
