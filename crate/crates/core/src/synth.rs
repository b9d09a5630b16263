//! Random DAGs and structural-equation data generation.
//!
//! Base data is `SD = σ·F + μ` with `F` standard normal and a single `σ ~ U(0.5, 2)`.
//! Parents are then added to children in topological order, either linearly
//! (`child += Σ w·parent`) or through `tanh` with additive noise.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distance_stats::SampleMatrix;
use crate::error::{CkcError, Result};
use crate::graph_space::{CausalGraph, Edge};

/// Default magnitude range for random edge weights.
pub const DEFAULT_WEIGHT_RANGE: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMode {
    #[default]
    Zero,
    /// One `U(-4, 4)` draw per sample, shared by every feature of that row.
    PerSample,
    /// One `U(-4, 4)` draw per feature, shared by every row.
    PerFeature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Laplace noise with the same standard deviation as the Gaussian option.
    Laplace,
}

impl NoiseKind {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R, scale: f64) -> f64 {
        match self {
            NoiseKind::Gaussian => scale * rng.sample::<f64, _>(StandardNormal),
            NoiseKind::Laplace => {
                // Difference of two unit exponentials is Laplace(0, 1) with variance 2.
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                scale * (e1 - e2) / std::f64::consts::SQRT_2
            }
        }
    }
}

/// Structural mechanism applied along the edges of a DAG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub nonlinear: bool,
    /// Noise added to every node with at least one parent; nonlinear mechanism only.
    pub noise_scale: f64,
    pub noise: NoiseKind,
}

impl Mechanism {
    pub const LINEAR: Mechanism = Mechanism {
        nonlinear: false,
        noise_scale: 0.0,
        noise: NoiseKind::Gaussian,
    };

    pub fn nonlinear(noise_scale: f64) -> Self {
        Mechanism {
            nonlinear: true,
            noise_scale,
            noise: NoiseKind::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Samples per group.
    pub n: usize,
    pub m: usize,
    pub edge_prob: f64,
    /// When false the base data is returned without applying any graph.
    pub corr_nonzero: bool,
    pub mu_mode: MuMode,
    pub nonlinear: bool,
    pub noise_scale: f64,
    pub noise_kind: NoiseKind,
    pub weight_range: (f64, f64),
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 100,
            m: 10,
            edge_prob: 0.3,
            corr_nonzero: true,
            mu_mode: MuMode::Zero,
            nonlinear: false,
            noise_scale: 1.0,
            noise_kind: NoiseKind::Gaussian,
            weight_range: DEFAULT_WEIGHT_RANGE,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < SampleMatrix::MIN_SAMPLES {
            return Err(CkcError::DimensionTooSmall {
                required: SampleMatrix::MIN_SAMPLES,
                actual: self.n,
            });
        }
        if self.m < SampleMatrix::MIN_FEATURES {
            return Err(CkcError::DimensionTooSmall {
                required: SampleMatrix::MIN_FEATURES,
                actual: self.m,
            });
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(CkcError::OutOfDomain {
                name: "edge_prob",
                value: self.edge_prob,
                domain: "[0, 1]",
            });
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(CkcError::OutOfDomain {
                name: "noise_scale",
                value: self.noise_scale,
                domain: "[0, inf)",
            });
        }
        let (lo, hi) = self.weight_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(CkcError::InvalidArgument(format!("bad weight range ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn mechanism(&self) -> Mechanism {
        Mechanism {
            nonlinear: self.nonlinear,
            noise_scale: self.noise_scale,
            noise: self.noise_kind,
        }
    }
}

fn random_weight<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let magnitude = if hi > lo { rng.random_range(lo..hi) } else { lo };
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Random DAG: a uniformly random topological order, each forward pair an edge
/// with probability `edge_prob`, weights with magnitude in `weight_range` and random sign.
pub fn random_dag_with<R: Rng + ?Sized>(m: usize, edge_prob: f64, weight_range: (f64, f64), rng: &mut R) -> CausalGraph {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            if rng.random::<f64>() < edge_prob {
                edges.push(Edge {
                    parent: order[a],
                    child: order[b],
                    weight: random_weight(rng, weight_range),
                });
            }
        }
    }
    CausalGraph::new(m, edges).expect("forward edges over a permutation are valid")
}

pub fn random_dag(m: usize, edge_prob: f64, seed: u64) -> CausalGraph {
    random_dag_with(m, edge_prob, DEFAULT_WEIGHT_RANGE, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The chain `X1 → X2 → … → Xm` with random-sign weights.
pub fn chain_dag<R: Rng + ?Sized>(m: usize, weight_range: (f64, f64), rng: &mut R) -> CausalGraph {
    let edges = (1..m)
        .map(|child| Edge {
            parent: child - 1,
            child,
            weight: random_weight(rng, weight_range),
        })
        .collect();
    CausalGraph::new(m, edges).expect("chain edges are valid")
}

pub fn gen_base_with<R: Rng + ?Sized>(n: usize, m: usize, mu_mode: MuMode, rng: &mut R) -> Result<SampleMatrix> {
    let sigma = rng.random_range(0.5..2.0);
    let f = Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal));
    let mut sd = f * sigma;
    match mu_mode {
        MuMode::Zero => {}
        MuMode::PerSample => {
            let mu = Array1::from_shape_fn(n, |_| rng.random_range(-4.0..4.0));
            sd += &mu.insert_axis(Axis(1));
        }
        MuMode::PerFeature => {
            let mu = Array1::from_shape_fn(m, |_| rng.random_range(-4.0..4.0));
            sd += &mu;
        }
    }
    SampleMatrix::new(sd)
}

pub fn gen_base(config: &GenConfig) -> Result<SampleMatrix> {
    config.validate()?;
    gen_base_with(config.n, config.m, config.mu_mode, &mut ChaCha8Rng::seed_from_u64(config.seed))
}

/// Adds each node's parents to it in topological order.
pub fn apply_sem<R: Rng + ?Sized>(
    sd: &SampleMatrix,
    graph: &CausalGraph,
    mechanism: &Mechanism,
    rng: &mut R,
) -> Result<SampleMatrix> {
    if graph.node_count() != sd.n_features() {
        return Err(CkcError::NodeCountMismatch {
            left: graph.node_count(),
            right: sd.n_features(),
        });
    }
    let order = graph.topological_order()?;
    let mut data = sd.data().clone();
    for child in order {
        let parents: Vec<Edge> = graph.parents(child).copied().collect();
        if parents.is_empty() {
            continue;
        }
        for row in 0..data.nrows() {
            let mut push = 0.0;
            for e in &parents {
                let x = data[[row, e.parent]];
                push += e.weight * if mechanism.nonlinear { x.tanh() } else { x };
            }
            if mechanism.nonlinear {
                push += mechanism.noise.draw(rng, mechanism.noise_scale);
            }
            data[[row, child]] += push;
        }
    }
    SampleMatrix::new(data)
}

/// One group: fresh base data pushed through `graph`.
pub fn gen_group<R: Rng + ?Sized>(config: &GenConfig, graph: &CausalGraph, rng: &mut R) -> Result<SampleMatrix> {
    let base = gen_base_with(config.n, config.m, config.mu_mode, rng)?;
    if config.corr_nonzero {
        apply_sem(&base, graph, &config.mechanism(), rng)
    } else {
        Ok(base)
    }
}

fn stack(groups: &[SampleMatrix]) -> Result<SampleMatrix> {
    let views: Vec<_> = groups.iter().map(|g| g.data().view()).collect();
    let data = ndarray::concatenate(Axis(0), &views).map_err(|e| CkcError::InvalidArgument(e.to_string()))?;
    SampleMatrix::new(data)
}

/// A labelled data set of concatenated subgroups and the graphs that produced them.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub samples: SampleMatrix,
    pub labels: Vec<usize>,
    pub graphs: Vec<CausalGraph>,
}

/// `k_groups` independent random DAGs with `config.n` samples each.
pub fn benchmark_groups(k_groups: usize, config: &GenConfig) -> Result<Benchmark> {
    config.validate()?;
    if k_groups < 2 {
        return Err(CkcError::InvalidArgument(format!("need at least 2 groups, got {k_groups}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let graphs: Vec<CausalGraph> = (0..k_groups)
        .map(|_| random_dag_with(config.m, config.edge_prob, config.weight_range, &mut rng))
        .collect();
    from_graphs(graphs, config, &mut rng)
}

/// A chain group followed by an empty-graph group.
pub fn chain_vs_empty(config: &GenConfig) -> Result<Benchmark> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let graphs = vec![chain_dag(config.m, config.weight_range, &mut rng), CausalGraph::empty(config.m)];
    from_graphs(graphs, config, &mut rng)
}

fn from_graphs(graphs: Vec<CausalGraph>, config: &GenConfig, rng: &mut ChaCha8Rng) -> Result<Benchmark> {
    let groups = graphs
        .iter()
        .map(|g| gen_group(config, g, rng))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..graphs.len()).flat_map(|g| std::iter::repeat_n(g, config.n)).collect();
    Ok(Benchmark {
        samples: stack(&groups)?,
        labels,
        graphs,
    })
}

/// Chain `|w| ∈ [1, 2]` vs empty graph, linear mechanism, `μ = 0`.
pub fn two_group_benchmark(n: usize, m: usize, seed: u64) -> Result<Benchmark> {
    chain_vs_empty(&GenConfig {
        n,
        m,
        weight_range: (1.0, 2.0),
        seed,
        ..GenConfig::default()
    })
}

/// Regression data whose first `invariant` slopes are shared by every subgroup
/// while the remaining `varying` slopes flip sign between consecutive subgroups.
#[derive(Debug, Clone)]
pub struct RegressionDesign {
    pub samples: SampleMatrix,
    pub target: Vec<f64>,
    pub labels: Vec<usize>,
    /// Row `g` holds the true intercept and slopes of subgroup `g`.
    pub coefficients: Array2<f64>,
}

pub fn invariant_varying_design(
    k_groups: usize,
    n_per: usize,
    invariant: usize,
    varying: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<RegressionDesign> {
    let m = invariant + varying;
    if k_groups < 2 || n_per < SampleMatrix::MIN_SAMPLES || m < SampleMatrix::MIN_FEATURES {
        return Err(CkcError::InvalidArgument(format!(
            "design needs >= 2 groups, >= 4 rows per group and >= 2 features (got {k_groups}, {n_per}, {m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared: Vec<f64> = (0..invariant).map(|_| random_weight(&mut rng, (0.5, 2.0))).collect();
    let magnitudes: Vec<f64> = (0..varying).map(|_| rng.random_range(1.0..2.0)).collect();
    let intercept = rng.random_range(-1.0..1.0);

    let mut coefficients = Array2::<f64>::zeros((k_groups, m + 1));
    for g in 0..k_groups {
        coefficients[[g, 0]] = intercept;
        for (p, &b) in shared.iter().enumerate() {
            coefficients[[g, p + 1]] = b;
        }
        let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
        for (p, &c) in magnitudes.iter().enumerate() {
            coefficients[[g, invariant + p + 1]] = sign * c * rng.random_range(0.8..1.2);
        }
    }

    let n = k_groups * n_per;
    let mut x = Array2::<f64>::zeros((n, m));
    let mut target = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for g in 0..k_groups {
        let shift: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        for r in 0..n_per {
            let row = g * n_per + r;
            let mut y = coefficients[[g, 0]];
            for p in 0..m {
                let v = shift[p] + rng.sample::<f64, _>(StandardNormal);
                x[[row, p]] = v;
                y += coefficients[[g, p + 1]] * v;
            }
            target.push(y + noise_sd * rng.sample::<f64, _>(StandardNormal));
            labels.push(g);
        }
    }
    Ok(RegressionDesign {
        samples: SampleMatrix::new(x)?,
        target,
        labels,
        coefficients,
    })
}
