use turnover_core::estimators::{estimate_series, AlphaSet, EstimatorId, RollingStats};
use turnover_core::experiments::*;

fn small(n: usize, seed: u64) -> SyntheticAlphas {
    let spec = SyntheticAlphaSpec {
        days: 180,
        assets: 20,
        ..SyntheticAlphaSpec::wide(n)
    };
    synthetic_alpha_set(seed, &spec).unwrap()
}

fn cfg() -> ExperimentConfig {
    ExperimentConfig {
        window: 60,
        ..ExperimentConfig::default()
    }
}

fn subset(a: &SyntheticAlphas, idx: &[usize]) -> AlphaSet {
    let names = idx.iter().map(|&k| a.names[k].clone()).collect();
    let panels: Vec<_> = idx.iter().map(|&k| a.positions[k].clone()).collect();
    AlphaSet::new(names, &panels, &a.returns, None).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn close_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b),
        (None, None) => true,
        _ => false,
    }
}

fn assert_rows_close(got: &[MetricsRow], want: &[MetricsRow]) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.estimator, w.estimator);
        let (g, w) = (g.metrics, w.metrics);
        assert!(close(g.rho1, w.rho1) && close(g.rho2, w.rho2), "{g:?} vs {w:?}");
        assert!(close_opt(g.rho3, w.rho3) && close_opt(g.rho4, w.rho4) && close_opt(g.rho5, w.rho5));
    }
}

fn hand_average(tables: &[Vec<MetricsRow>], abs_all: bool) -> Vec<MetricsRow> {
    let n = tables.len() as f64;
    (0..tables[0].len())
        .map(|j| {
            let get = |f: &dyn Fn(&Metrics) -> f64| tables.iter().map(|t| f(&t[j].metrics)).sum::<f64>() / n;
            let opt = |f: &dyn Fn(&Metrics) -> Option<f64>| Some(get(&|m| f(m).unwrap()));
            let a = |v: f64| if abs_all { v.abs() } else { v };
            MetricsRow {
                estimator: tables[0][j].estimator,
                metrics: Metrics {
                    rho1: get(&|m| m.rho1.abs()),
                    rho2: get(&|m| a(m.rho2)),
                    rho3: opt(&|m| m.rho3.map(f64::abs)),
                    rho4: opt(&|m| m.rho4.map(a)),
                    rho5: opt(&|m| m.rho5.map(a)),
                    days: 0,
                    zero_turnover_days: 0,
                },
            }
        })
        .collect()
}

#[test]
fn single_pair_table_is_that_pairs_metrics() {
    let a = small(2, 3);
    let set = a.alpha_set().unwrap();
    let table = run_pairs_experiment(&set, &cfg()).unwrap();
    assert_eq!(table.portfolios, 1);
    let rolling = RollingStats::new(&set, 60).unwrap();
    let s = estimate_series(&set, &rolling, &[0, 1], &[0.5, 0.5], &cfg().estimate).unwrap();
    let rows = series_metrics(&s, Rho5Mode::Mean).unwrap();
    assert_rows_close(&table.rows, &hand_average(&[rows], false));
}

#[test]
fn three_alpha_pairs_average_hand_composed_pairs() {
    let a = small(3, 4);
    let table = run_pairs_experiment(&a.alpha_set().unwrap(), &cfg()).unwrap();
    assert_eq!(table.portfolios, 3);
    let per_pair: Vec<Vec<MetricsRow>> = [[0, 1], [0, 2], [1, 2]]
        .iter()
        .map(|idx| run_pairs_experiment(&subset(&a, idx), &cfg()).unwrap().rows)
        .collect();
    assert_rows_close(&table.rows, &hand_average(&per_pair, false));
}

#[test]
fn sobol_table_averages_single_portfolios() {
    let a = small(4, 5);
    let set = a.alpha_set().unwrap();
    let table = run_sobol_experiment(&set, 8, &cfg()).unwrap();
    assert_eq!(table.portfolios, 8);
    let rolling = RollingStats::new(&set, 60).unwrap();
    let singles: Vec<Vec<MetricsRow>> = sobol_weights(4, 8)
        .unwrap()
        .iter()
        .map(|w| {
            let s = estimate_series(&set, &rolling, &[0, 1, 2, 3], w.as_slice(), &cfg().estimate).unwrap();
            series_metrics(&s, Rho5Mode::Mean).unwrap()
        })
        .collect();
    assert_rows_close(&table.rows, &hand_average(&singles, true));
    assert_eq!(table.rows[0].estimator, EstimatorId::KlSpectral);
}

#[test]
fn pairs_table_ignores_alpha_order() {
    let a = small(4, 6);
    let fwd = run_pairs_experiment(&a.alpha_set().unwrap(), &cfg()).unwrap();
    let rev = run_pairs_experiment(&subset(&a, &[3, 1, 0, 2]), &cfg()).unwrap();
    assert_rows_close(&fwd.rows, &rev.rows);
}

#[test]
fn sobol_count_one_ignores_alpha_order() {
    let a = small(3, 7);
    let fwd = run_sobol_experiment(&a.alpha_set().unwrap(), 1, &cfg()).unwrap();
    let rev = run_sobol_experiment(&subset(&a, &[2, 0, 1]), 1, &cfg()).unwrap();
    assert_rows_close(&fwd.rows, &rev.rows);
}

#[test]
fn table_invariants() {
    let a = small(4, 8);
    let set = a.alpha_set().unwrap();
    for table in [
        run_pairs_experiment(&set, &cfg()).unwrap(),
        run_sobol_experiment(&set, 5, &cfg()).unwrap(),
    ] {
        let tmax = table.row(EstimatorId::Tmax).unwrap();
        assert_eq!((tmax.rho3, tmax.rho4), (Some(1.0), Some(1.0)));
        assert_eq!(tmax.rho1, tmax.rho2);
        for r in &table.rows {
            let m = r.metrics;
            assert!(m.rho2 >= m.rho1.abs() - 1e-15);
            assert!(m.rho4.unwrap() >= m.rho3.unwrap().abs() - 1e-15);
            assert!(m.rho5.unwrap() >= 0.0);
        }
    }
}

#[test]
fn deterministic_reports() {
    let set = small(4, 9).alpha_set().unwrap();
    let a = table_csv(&run_sobol_experiment(&set, 6, &cfg()).unwrap());
    let b = table_csv(&run_sobol_experiment(&set, 6, &cfg()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn rejects_bad_requests() {
    let set = small(2, 1).alpha_set().unwrap();
    assert!(run_sobol_experiment(&set, 0, &cfg()).is_err());
    let one = subset(&small(2, 1), &[0]);
    assert!(run_pairs_experiment(&one, &cfg()).is_err());
    let long = ExperimentConfig { window: 500, ..cfg() };
    assert!(run_pairs_experiment(&set, &long).is_err());
}
