use turnover_wasm::{crossing_series_json, pair_estimates_json, sobol_points_json};

#[test]
fn pair_estimates_match_closed_forms() {
    let v = pair_estimates_json([0.4, 0.2], [1.0, 1.0], 0.5, [0.5, 0.5]).unwrap();
    assert!((v["kl_pair"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!((v["tmax"].as_f64().unwrap() - 0.3).abs() < 1e-15);
    let sigma = 0.75f64.sqrt();
    assert!((v["sigma"].as_f64().unwrap() - sigma).abs() < 1e-15);
    assert!((v["t1"].as_f64().unwrap() - 0.3 * sigma).abs() < 1e-15);
}

#[test]
fn pair_estimates_reject_bad_input() {
    assert!(pair_estimates_json([0.4, 0.2], [1.0, 1.0], 1.5, [0.5, 0.5]).is_err());
}

#[test]
fn crossing_series_respects_bound() {
    let v = crossing_series_json(3, [0.5, 0.9], 0.3, 0.5, 200).unwrap();
    let real = v["real"].as_array().unwrap();
    let tmax = v["tmax"].as_array().unwrap();
    assert_eq!(real.len(), 200 - 1 - 59);
    for (r, t) in real.iter().zip(tmax) {
        assert!(r.as_f64().unwrap() <= t.as_f64().unwrap() + 1e-12);
    }
    assert_eq!(v["mae"]["tmax"].as_f64().unwrap() > 0.0, true);
    assert!(crossing_series_json(3, [0.5, 0.9], 0.3, 0.5, 40).is_err());
}

#[test]
fn sobol_points_start_at_half() {
    let v = sobol_points_json(2, 3).unwrap();
    assert_eq!(v.to_string(), "[[0.5,0.5],[0.75,0.25],[0.25,0.75]]");
    assert!(sobol_points_json(0, 3).is_err());
}
