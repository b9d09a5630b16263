//! Lagged causal coupling between two groups of node time series, its yearly
//! aggregate, and next-year warnings at sign transitions of that aggregate.
//!
//! A scalar node series is turned into samples by delay embedding: the window
//! `series[t_end - w .. t_end]` yields `w - e + 1` rows of `e` consecutive values.
//! The window's mapping matrix is the mean of the row-wise `Φ` matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::causal_kernel::kappa;
use crate::causal_mapping::{MappingForm, MappingMatrix, SampleMapper};
use crate::distance_stats::{sum_fixed_order, SampleMatrix};
use crate::error::{CkcError, Result};
use crate::eval_metrics::ConfusionCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    West,
    East,
}

impl std::str::FromStr for Region {
    type Err = CkcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "west" | "we" => Ok(Region::West),
            "east" | "ea" => Ok(Region::East),
            other => Err(CkcError::InvalidArgument(format!("unknown region {other:?}"))),
        }
    }
}

/// Equal-length node series of one region on a shared time index.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSeriesSet {
    region: Region,
    node_ids: Vec<String>,
    series: Vec<Vec<f64>>,
    years: Vec<i32>,
}

impl NodeSeriesSet {
    pub fn new(region: Region, node_ids: Vec<String>, series: Vec<Vec<f64>>, years: Vec<i32>) -> Result<Self> {
        if series.is_empty() {
            return Err(CkcError::EmptyInput);
        }
        if node_ids.len() != series.len() {
            return Err(CkcError::LengthMismatch {
                left: node_ids.len(),
                right: series.len(),
            });
        }
        for s in &series {
            if s.len() != years.len() {
                return Err(CkcError::LengthMismatch {
                    left: s.len(),
                    right: years.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(CkcError::InvalidArgument("series contains a non-finite value".into()));
            }
        }
        Ok(Self {
            region,
            node_ids,
            series,
            years,
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn series(&self) -> &[Vec<f64>] {
        &self.series
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.series.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarnConfig {
    pub window: usize,
    pub embed_dim: usize,
    pub max_lag: usize,
    pub lag_stride: usize,
    /// Spacing of the evaluation times `t`.
    pub time_step: usize,
    pub nu: f64,
    /// Minimum `|YC_z|` for an extremum to trigger a warning.
    pub tau: f64,
    pub form: MappingForm,
}

impl Default for WarnConfig {
    fn default() -> Self {
        Self {
            window: 60,
            embed_dim: 4,
            max_lag: 100,
            lag_stride: 10,
            time_step: 10,
            nu: 0.05,
            tau: 1.0,
            form: MappingForm::Calibrated,
        }
    }
}

impl WarnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < SampleMatrix::MIN_FEATURES {
            return Err(CkcError::DimensionTooSmall {
                required: SampleMatrix::MIN_FEATURES,
                actual: self.embed_dim,
            });
        }
        if self.window < self.embed_dim + 3 {
            return Err(CkcError::TooFewEmbeddedSamples {
                window: self.window,
                embed_dim: self.embed_dim,
                rows: (self.window + 1).saturating_sub(self.embed_dim),
            });
        }
        if self.lag_stride == 0 || self.time_step == 0 {
            return Err(CkcError::InvalidArgument("lag_stride and time_step must be positive".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(CkcError::OutOfDomain {
                name: "tau",
                value: self.tau,
                domain: "[0, inf)",
            });
        }
        Ok(())
    }

    /// `0, stride, 2·stride, …` up to `max_lag`.
    pub fn lags(&self) -> Vec<usize> {
        (0..=self.max_lag).step_by(self.lag_stride.max(1)).collect()
    }

    /// Earliest evaluation time whose most-lagged window still fits.
    pub fn first_time(&self) -> usize {
        self.window + self.max_lag
    }
}

/// Delay embedding of `series[t_end - window .. t_end]`.
pub fn window_embed(series: &[f64], t_end: usize, window: usize, embed_dim: usize) -> Result<SampleMatrix> {
    if t_end > series.len() || t_end < window {
        return Err(CkcError::WindowOutOfRange {
            t_end,
            window,
            len: series.len(),
        });
    }
    let rows = (window + 1).saturating_sub(embed_dim);
    if embed_dim < SampleMatrix::MIN_FEATURES || rows < SampleMatrix::MIN_SAMPLES {
        return Err(CkcError::TooFewEmbeddedSamples {
            window,
            embed_dim,
            rows,
        });
    }
    let start = t_end - window;
    let data = Array2::from_shape_fn((rows, embed_dim), |(r, c)| series[start + r + c]);
    SampleMatrix::new(data)
}

/// Mean of the row-wise mapping matrices of one embedded window.
pub fn window_mapping(series: &[f64], t_end: usize, config: &WarnConfig) -> Result<MappingMatrix> {
    let samples = window_embed(series, t_end, config.window, config.embed_dim)?;
    let mapper = SampleMapper::new(&samples, config.nu, config.form)?;
    let mean = mapper.aggregate() / mapper.n_samples() as f64;
    MappingMatrix::from_parts(mean, t_end, config.nu)
}

fn lagged_end(t: usize, theta: usize, window: usize, len: usize) -> Result<usize> {
    t.checked_sub(theta)
        .filter(|&e| e >= window)
        .ok_or(CkcError::WindowOutOfRange { t_end: t, window: window + theta, len })
}

/// `(κ(θ), κ(-θ))`: node `i` lagged by `θ` against `j` at `t`, then the reverse.
pub fn lagged_kappa(i_series: &[f64], j_series: &[f64], t: usize, theta: usize, config: &WarnConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let lagged = lagged_end(t, theta, config.window, i_series.len().min(j_series.len()))?;
    let i_now = window_mapping(i_series, t, config)?;
    let j_now = window_mapping(j_series, t, config)?;
    let i_lag = window_mapping(i_series, lagged, config)?;
    let j_lag = window_mapping(j_series, lagged, config)?;
    Ok((kappa(&i_lag, &j_now)?, kappa(&i_now, &j_lag)?))
}

/// Window mappings for every node and window end a TC evaluation touches.
struct MappingCache {
    west: Vec<HashMap<usize, MappingMatrix>>,
    east: Vec<HashMap<usize, MappingMatrix>>,
}

impl MappingCache {
    fn build(west: &NodeSeriesSet, east: &NodeSeriesSet, times: &[usize], config: &WarnConfig) -> Result<Self> {
        let lags = config.lags();
        let ends: BTreeSet<usize> = times
            .iter()
            .flat_map(|&t| lags.iter().filter_map(move |&theta| t.checked_sub(theta)))
            .collect();
        let ends: Vec<usize> = ends.into_iter().collect();
        let build_region = |set: &NodeSeriesSet| -> Result<Vec<HashMap<usize, MappingMatrix>>> {
            set.series()
                .iter()
                .map(|s| {
                    let compute = |&e: &usize| window_mapping(s, e, config).map(|m| (e, m));
                    #[cfg(feature = "parallel")]
                    let entries: Result<Vec<(usize, MappingMatrix)>> = {
                        use rayon::prelude::*;
                        ends.par_iter().map(compute).collect()
                    };
                    #[cfg(not(feature = "parallel"))]
                    let entries: Result<Vec<(usize, MappingMatrix)>> = ends.iter().map(compute).collect();
                    Ok(entries?.into_iter().collect())
                })
                .collect()
        };
        Ok(Self {
            west: build_region(west)?,
            east: build_region(east)?,
        })
    }

    fn total_causal(&self, t: usize, config: &WarnConfig) -> Result<f64> {
        let lags = config.lags();
        let mut terms = Vec::with_capacity(self.west.len() * self.east.len() * lags.len() * 2);
        for wi in &self.west {
            for ej in &self.east {
                for &theta in &lags {
                    let lagged = t - theta;
                    terms.push(kappa(&wi[&lagged], &ej[&t])?);
                    terms.push(kappa(&wi[&t], &ej[&lagged])?);
                }
            }
        }
        Ok(sum_fixed_order(terms.into_iter()))
    }
}

fn check_groups(west: &NodeSeriesSet, east: &NodeSeriesSet, config: &WarnConfig) -> Result<()> {
    config.validate()?;
    if west.len() != east.len() {
        return Err(CkcError::LengthMismatch {
            left: west.len(),
            right: east.len(),
        });
    }
    Ok(())
}

fn check_time(t: usize, len: usize, config: &WarnConfig) -> Result<()> {
    if t > len || t < config.first_time() {
        return Err(CkcError::WindowOutOfRange {
            t_end: t,
            window: config.first_time(),
            len,
        });
    }
    Ok(())
}

/// `TC(t) = Σ_{i∈west} Σ_{j∈east} Σ_θ κ(θ) + κ(-θ)` over the lag grid.
pub fn total_causal(west: &NodeSeriesSet, east: &NodeSeriesSet, t: usize, config: &WarnConfig) -> Result<f64> {
    check_groups(west, east, config)?;
    check_time(t, west.len(), config)?;
    MappingCache::build(west, east, &[t], config)?.total_causal(t, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcPoint {
    /// Exclusive end of the unlagged windows.
    pub t: usize,
    /// Year of the last time point inside the window.
    pub year: i32,
    pub tc: f64,
}

/// TC at `first_time, first_time + time_step, …` up to the series length.
pub fn tc_series(west: &NodeSeriesSet, east: &NodeSeriesSet, config: &WarnConfig) -> Result<Vec<TcPoint>> {
    check_groups(west, east, config)?;
    let len = west.len();
    let times: Vec<usize> = (config.first_time()..=len).step_by(config.time_step).collect();
    if times.is_empty() {
        return Err(CkcError::WindowOutOfRange {
            t_end: config.first_time(),
            window: config.first_time(),
            len,
        });
    }
    let cache = MappingCache::build(west, east, &times, config)?;
    times
        .iter()
        .map(|&t| {
            Ok(TcPoint {
                t,
                year: west.years()[t - 1],
                tc: cache.total_causal(t, config)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearlyCausal {
    pub year: i32,
    pub yc: f64,
    /// `yc` standardised over all years (population standard deviation).
    pub yc_z: f64,
}

/// `YC(y) = Σ_{t∈y} TC(t)`, then z-scored across years.
pub fn yearly_causal(tc: &[f64], years: &[i32]) -> Result<Vec<YearlyCausal>> {
    if tc.len() != years.len() {
        return Err(CkcError::LengthMismatch {
            left: tc.len(),
            right: years.len(),
        });
    }
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (&v, &y) in tc.iter().zip(years) {
        by_year.entry(y).or_default().push(v);
    }
    if by_year.len() < 2 {
        return Err(CkcError::TooFewYears {
            required: 2,
            actual: by_year.len(),
        });
    }
    let totals: Vec<(i32, f64)> = by_year
        .into_iter()
        .map(|(y, vals)| (y, sum_fixed_order(vals.into_iter())))
        .collect();
    let k = totals.len() as f64;
    let mean = sum_fixed_order(totals.iter().map(|p| p.1)) / k;
    let var = sum_fixed_order(totals.iter().map(|p| (p.1 - mean).powi(2))) / k;
    let sd = var.sqrt();
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(CkcError::ZeroVariance);
    }
    Ok(totals
        .into_iter()
        .map(|(year, yc)| YearlyCausal {
            year,
            yc,
            yc_z: (yc - mean) / sd,
        })
        .collect())
}

fn sign(v: f64) -> bool {
    v >= 0.0
}

/// Warn `y + 1` when `YC_z` changes sign at `y` and `|YC_z(y)|` is a local
/// maximum (neighbours only; the last year compares with its predecessor) of at least `tau`.
pub fn extract_warnings(years: &[i32], yc_z: &[f64], tau: f64) -> Result<BTreeSet<i32>> {
    if years.len() != yc_z.len() {
        return Err(CkcError::LengthMismatch {
            left: years.len(),
            right: yc_z.len(),
        });
    }
    if years.len() < 3 {
        return Err(CkcError::TooFewYears {
            required: 3,
            actual: years.len(),
        });
    }
    let last = yc_z.len() - 1;
    Ok((1..=last)
        .filter(|&i| {
            let a = yc_z[i].abs();
            sign(yc_z[i]) != sign(yc_z[i - 1])
                && a >= tau
                && a >= yc_z[i - 1].abs()
                && (i == last || a >= yc_z[i + 1].abs())
        })
        .map(|i| years[i] + 1)
        .collect())
}

/// Confusion counts over the years a warning could target (each analysed year after the first, plus one).
pub fn warning_confusion(years: &[i32], warned: &BTreeSet<i32>, events: &BTreeSet<i32>) -> ConfusionCounts {
    let candidates: BTreeSet<i32> = years.iter().skip(1).map(|y| y + 1).collect();
    let mut counts = ConfusionCounts::default();
    for y in candidates {
        match (warned.contains(&y), events.contains(&y)) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyWarningReport {
    pub tc: Vec<TcPoint>,
    pub yearly: Vec<YearlyCausal>,
    pub warned: BTreeSet<i32>,
}

pub fn run_early_warning(west: &NodeSeriesSet, east: &NodeSeriesSet, config: &WarnConfig) -> Result<EarlyWarningReport> {
    let tc = tc_series(west, east, config)?;
    let values: Vec<f64> = tc.iter().map(|p| p.tc).collect();
    let years: Vec<i32> = tc.iter().map(|p| p.year).collect();
    let yearly = yearly_causal(&values, &years)?;
    let ys: Vec<i32> = yearly.iter().map(|y| y.year).collect();
    let zs: Vec<f64> = yearly.iter().map(|y| y.yc_z).collect();
    let warned = extract_warnings(&ys, &zs, config.tau)?;
    Ok(EarlyWarningReport { tc, yearly, warned })
}

/// Synthetic two-region system whose east nodes copy lagged west nodes during one event year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSwitchConfig {
    pub years: usize,
    pub days_per_year: usize,
    pub first_year: i32,
    /// Offset of the coupled year from `first_year`.
    pub event_offset: usize,
    pub west_nodes: usize,
    pub east_nodes: usize,
    pub ar_coef: f64,
    pub coupling_lag: usize,
    pub coupling_noise: f64,
    pub seed: u64,
}

impl Default for RegimeSwitchConfig {
    fn default() -> Self {
        // 360-day years hold the number of evaluation times per year constant at
        // the default step, so YC sums are comparable across years.
        Self {
            years: 10,
            days_per_year: 360,
            first_year: 2000,
            event_offset: 5,
            west_nodes: 3,
            east_nodes: 3,
            ar_coef: 0.9,
            coupling_lag: 30,
            coupling_noise: 0.2,
            seed: 0,
        }
    }
}

pub struct RegimeSwitch {
    pub west: NodeSeriesSet,
    pub east: NodeSeriesSet,
    pub event_year: i32,
}

/// West nodes are AR(1); east nodes are white noise except during the event year,
/// when east node `j` follows west node `j mod west_nodes` at `coupling_lag` plus noise.
/// A burn-in of `window + max_lag - 1` points precedes the first year so every
/// analysed year has full windows; those points carry the preceding year.
pub fn regime_switch_series(cfg: &RegimeSwitchConfig, warn: &WarnConfig) -> Result<RegimeSwitch> {
    if cfg.years < 3 || cfg.event_offset >= cfg.years || cfg.west_nodes == 0 || cfg.east_nodes == 0 {
        return Err(CkcError::InvalidArgument(
            "regime switch needs >= 3 years, an event inside them and non-empty regions".into(),
        ));
    }
    let burn_in = warn.first_time() - 1;
    let len = burn_in + cfg.years * cfg.days_per_year;
    let years: Vec<i32> = (0..len)
        .map(|t| {
            if t < burn_in {
                cfg.first_year - 1
            } else {
                cfg.first_year + ((t - burn_in) / cfg.days_per_year) as i32
            }
        })
        .collect();
    let event_year = cfg.first_year + cfg.event_offset as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let innovation = (1.0 - cfg.ar_coef * cfg.ar_coef).sqrt();
    let west: Vec<Vec<f64>> = (0..cfg.west_nodes)
        .map(|_| {
            let mut x = rng.sample::<f64, _>(StandardNormal);
            (0..len)
                .map(|_| {
                    x = cfg.ar_coef * x + innovation * rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect()
        })
        .collect();
    let east: Vec<Vec<f64>> = (0..cfg.east_nodes)
        .map(|j| {
            let source = &west[j % cfg.west_nodes];
            (0..len)
                .map(|t| {
                    let noise = rng.sample::<f64, _>(StandardNormal);
                    if years[t] == event_year && t >= cfg.coupling_lag {
                        source[t - cfg.coupling_lag] + cfg.coupling_noise * noise
                    } else {
                        noise
                    }
                })
                .collect()
        })
        .collect();
    let ids = |prefix: &str, k: usize| (0..k).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    Ok(RegimeSwitch {
        west: NodeSeriesSet::new(Region::West, ids("w", cfg.west_nodes), west, years.clone())?,
        east: NodeSeriesSet::new(Region::East, ids("e", cfg.east_nodes), east, years)?,
        event_year,
    })
}
