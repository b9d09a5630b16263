//! Browser demo: three operations of `ckc-core` returning JSON strings.
//!
//! The plain functions are usable natively; the `#[wasm_bindgen]` wrappers only
//! convert errors into JavaScript values.

use ckc_core::causal_kernel::{kernel_matrix, within_cross_means};
use ckc_core::causal_mapping::{dependence_decision_with, Dependence, MappingForm, SampleMapper};
use ckc_core::clustering::{feature_kmeans, kernel_kmeans, DEFAULT_MAX_ITER};
use ckc_core::early_warning::{regime_switch_series, run_early_warning, RegimeSwitchConfig, WarnConfig};
use ckc_core::eval_metrics::adjusted_rand_index;
use ckc_core::synth::two_group_benchmark;
use ckc_core::{CkcError, SampleMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct ClusterDemo {
    /// Row-major `2n × 2n` kernel.
    pub kernel: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
    pub labels: Vec<usize>,
    pub ari: f64,
    pub raw_ari: f64,
    pub within: f64,
    pub cross: f64,
}

/// Chain-vs-empty benchmark, its kernel, and kernel vs raw-feature k-means.
pub fn cluster_demo(n: usize, m: usize, seed: u64, nu: f64) -> Result<ClusterDemo, CkcError> {
    let bench = two_group_benchmark(n, m, seed)?;
    let k = kernel_matrix(&bench.samples, nu)?;
    let fit = kernel_kmeans(&k, 2, seed, DEFAULT_MAX_ITER)?;
    let raw = feature_kmeans(&bench.samples, 2, seed, DEFAULT_MAX_ITER)?;
    let (within, cross) = within_cross_means(&k, &bench.labels)?;
    Ok(ClusterDemo {
        kernel: k.data().rows().into_iter().map(|r| r.to_vec()).collect(),
        ari: adjusted_rand_index(&bench.labels, &fit.labels)?,
        raw_ari: adjusted_rand_index(&bench.labels, &raw.labels)?,
        truth: bench.labels,
        labels: fit.labels,
        within,
        cross,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub noise: f64,
    pub aggregate: f64,
    pub dependent: bool,
}

/// Dependence verdict for `y = x + σ ε` at each noise level `σ`.
pub fn dependence_sweep(n: usize, seed: u64, nu: f64, noise_levels: &[f64]) -> Result<Vec<SweepPoint>, CkcError> {
    noise_levels
        .iter()
        .map(|&noise| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let x: f64 = rng.sample(StandardNormal);
                    let e: f64 = rng.sample(StandardNormal);
                    vec![x, x + noise * e]
                })
                .collect();
            let samples = SampleMatrix::from_rows(&rows)?;
            let mapper = SampleMapper::new(&samples, nu, MappingForm::Calibrated)?;
            Ok(SweepPoint {
                noise,
                aggregate: mapper.aggregate()[[0, 1]],
                dependent: dependence_decision_with(&mapper, 0, 1)? == Dependence::Dependent,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct YearPoint {
    pub year: i32,
    pub yc_z: f64,
    pub warned: bool,
}

#[derive(Debug, Serialize)]
pub struct WarningDemo {
    pub event_year: i32,
    pub years: Vec<YearPoint>,
}

/// Standardised yearly causal index on the synthetic regime-switch system.
pub fn warning_demo(seed: u64, years: usize, event_offset: usize) -> Result<WarningDemo, CkcError> {
    let warn = WarnConfig::default();
    let cfg = RegimeSwitchConfig {
        years,
        event_offset,
        seed,
        ..RegimeSwitchConfig::default()
    };
    let rs = regime_switch_series(&cfg, &warn)?;
    let report = run_early_warning(&rs.west, &rs.east, &warn)?;
    Ok(WarningDemo {
        event_year: rs.event_year,
        years: report
            .yearly
            .iter()
            .map(|y| YearPoint {
                year: y.year,
                yc_z: y.yc_z,
                warned: report.warned.contains(&y.year),
            })
            .collect(),
    })
}

fn to_js<T: Serialize>(result: Result<T, CkcError>) -> Result<String, JsValue> {
    let value = result.map_err(|e| JsValue::from_str(&format!("{}: {e}", e.name())))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = clusterDemo)]
pub fn cluster_demo_js(n: usize, m: usize, seed: u32, nu: f64) -> Result<String, JsValue> {
    to_js(cluster_demo(n, m, u64::from(seed), nu))
}

#[wasm_bindgen(js_name = dependenceSweep)]
pub fn dependence_sweep_js(n: usize, seed: u32, nu: f64, noise_levels: Vec<f64>) -> Result<String, JsValue> {
    to_js(dependence_sweep(n, u64::from(seed), nu, &noise_levels))
}

#[wasm_bindgen(js_name = warningDemo)]
pub fn warning_demo_js(seed: u32, years: usize, event_offset: usize) -> Result<String, JsValue> {
    to_js(warning_demo(u64::from(seed), years, event_offset))
}
