//! Browser bindings for the turnover estimators.
//!
//! Each exported function returns a JSON string; `www/index.html` draws the
//! results on a canvas. The plain `*_json` functions hold the logic so they
//! can be tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use turnover_core::estimators::{
    estimate_series, kl_pairwise, new_estimators, EstimateOptions, EstimatorInputs, RollingStats,
};
use turnover_core::experiments::{metrics, synthetic_alpha_set, Rho5Mode, SobolSampler, SyntheticAlphaSpec};
use turnover_core::turnover::max_turnover;
use turnover_core::Matrix;

const SERIES_WINDOW: usize = 60;

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// All two-alpha estimates for given turnovers, return stds, correlation
/// and weights.
pub fn pair_estimates_json(
    tau: [f64; 2],
    std: [f64; 2],
    rho: f64,
    x: [f64; 2],
) -> turnover_core::Result<Value> {
    let cov = Matrix::from_rows(&[
        [std[0] * std[0], rho * std[0] * std[1]],
        [rho * std[0] * std[1], std[1] * std[1]],
    ]);
    let inputs = EstimatorInputs::new(x.to_vec(), tau.to_vec(), cov)?;
    let t = new_estimators(&inputs)?;
    Ok(json!({
        "kl_pair": kl_pairwise(tau[0], tau[1], x[0], x[1], rho)?,
        "t1": t.t1,
        "t2": t.t2,
        "t3": t.t3.map_or(Value::Null, finite),
        "t4": t.t4,
        "tmax": max_turnover(&tau, &x)?,
        "sigma": inputs.sigma(),
    }))
}

/// Daily real turnover of a synthetic two-alpha portfolio next to the KL,
/// T*1 and no-crossing estimates, plus their mean absolute errors.
pub fn crossing_series_json(seed: u64, phi: [f64; 2], common: f64, x1: f64, days: usize) -> turnover_core::Result<Value> {
    let spec = SyntheticAlphaSpec {
        days,
        assets: 40,
        persistence: phi.to_vec(),
        common,
        volatility: 0.02,
    };
    let set = synthetic_alpha_set(seed, &spec)?.alpha_set()?;
    let rolling = RollingStats::new(&set, SERIES_WINDOW)?;
    let s = estimate_series(&set, &rolling, &[0, 1], &[x1, 1.0 - x1], &EstimateOptions::default())?;
    let err = |est: &[f64]| metrics(est, &s.real, &s.tmax, Rho5Mode::Mean).map(|m| m.rho2);
    let stats = set.stats(Default::default())?;
    Ok(json!({
        "real": s.real,
        "kl": s.kl,
        "t1": s.t1.iter().map(|&v| finite(v)).collect::<Vec<_>>(),
        "tmax": s.tmax,
        "mae": { "kl": err(&s.kl)?, "t1": err(&s.t1)?, "tmax": err(&s.tmax)? },
        "ratios": stats.iter().map(|st| st.ratio.map_or(Value::Null, finite)).collect::<Vec<_>>(),
    }))
}

/// The first `count` Sobol points of dimension `dim`.
pub fn sobol_points_json(dim: usize, count: usize) -> turnover_core::Result<Value> {
    let pts: Vec<Vec<f64>> = SobolSampler::new(dim)?.take(count).collect();
    Ok(json!(pts))
}

fn to_js(r: turnover_core::Result<Value>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn pair_estimates(tau1: f64, tau2: f64, std1: f64, std2: f64, rho: f64, x1: f64, x2: f64) -> Result<String, JsValue> {
    to_js(pair_estimates_json([tau1, tau2], [std1, std2], rho, [x1, x2]))
}

#[wasm_bindgen]
pub fn crossing_series(seed: u32, phi1: f64, phi2: f64, common: f64, x1: f64, days: u32) -> Result<String, JsValue> {
    to_js(crossing_series_json(seed as u64, [phi1, phi2], common, x1, days as usize))
}

#[wasm_bindgen]
pub fn sobol_points(dim: u32, count: u32) -> Result<String, JsValue> {
    to_js(sobol_points_json(dim as usize, count as usize))
}
