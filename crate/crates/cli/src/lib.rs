//! `ckc`: reproducible command-line pipelines over `ckc-core`.
//!
//! Tabular input and output is CSV with one header row; records are JSON lines.
//! Every subcommand is a pure function of its input files, flags and seed.

pub mod commands;
pub mod error;
pub mod io;

use std::path::PathBuf;

use ckc_core::clustering::DEFAULT_MAX_ITER;
use ckc_core::early_warning::WarnConfig;
use ckc_core::synth::{MuMode, NoiseKind};
use ckc_core::MappingForm;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, Result};

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "CKC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ckc", version, about = "Causal kernel clustering toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic samples from random structural equation models.
    Gen(GenArgs),
    /// Cluster samples with kernel k-means on the causal kernel.
    Cluster(ClusterArgs),
    /// Write the causal kernel matrix.
    Kernel(KernelArgs),
    /// Pairwise dependence verdicts from the aggregated sample mapping.
    Decide(DecideArgs),
    /// m-connectivity sets and equivalence of causal graphs.
    Graph(GraphArgs),
    /// Clustering agreement and confusion metrics.
    Metrics(MetricsArgs),
    /// Yearly causal index and warnings for two groups of node series.
    Earlywarn(EarlyWarnArgs),
    /// Cross-subgroup coefficient stability and held-out subgroup error.
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Calibrated,
    Literal,
}

impl From<FormArg> for MappingForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Calibrated => MappingForm::Calibrated,
            FormArg::Literal => MappingForm::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Chain DAG group followed by an empty DAG group.
    ChainEmpty,
    /// `--groups` independent random DAGs.
    Random,
    /// Two regions of node series with one coupled event year, as long CSV.
    RegimeSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MuArg {
    Zero,
    PerSample,
    PerFeature,
}

impl From<MuArg> for MuMode {
    fn from(m: MuArg) -> Self {
        match m {
            MuArg::Zero => MuMode::Zero,
            MuArg::PerSample => MuMode::PerSample,
            MuArg::PerFeature => MuMode::PerFeature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Laplace,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => NoiseKind::Gaussian,
            NoiseArg::Laplace => NoiseKind::Laplace,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "chain-empty")]
    pub kind: GenKind,
    /// Samples per group.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub groups: usize,
    #[arg(long, default_value_t = 0.3)]
    pub edge_prob: f64,
    /// Lower bound of `|w|`; defaults to 1 for chain-empty and 0.5 for random.
    #[arg(long)]
    pub weight_min: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub weight_max: f64,
    #[arg(long, value_enum, default_value = "zero")]
    pub mu: MuArg,
    #[arg(long)]
    pub nonlinear: bool,
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub noise: NoiseArg,
    /// Years of series (regime-switch).
    #[arg(long, default_value_t = 10)]
    pub years: usize,
    /// Offset of the coupled year from the first year (regime-switch).
    #[arg(long, default_value_t = 5)]
    pub event_offset: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth group labels (sample kinds).
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Edge list `group,parent,child,weight` of the generating graphs (sample kinds).
    #[arg(long)]
    pub graphs_out: Option<PathBuf>,
    /// Single-column `year` file of the coupled year (regime-switch).
    #[arg(long)]
    pub events_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MappingArgs {
    #[arg(long, default_value_t = 0.05)]
    pub nu: f64,
    #[arg(long, value_enum, default_value = "calibrated")]
    pub form: FormArg,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub mapping: MappingArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Label file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary of the fit (inertia, iterations, cluster sizes).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub mapping: MappingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub mapping: MappingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list with header `parent,child[,weight]`, 0-based node indices.
    #[arg(long)]
    pub edges: PathBuf,
    /// Node count; defaults to the largest index plus one.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Only report this path length; all lengths `1..nodes` otherwise.
    #[arg(long)]
    pub m_len: Option<usize>,
    /// Second edge list to test for equivalence.
    #[arg(long)]
    pub other: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, requires = "pred")]
    pub truth: Option<PathBuf>,
    #[arg(long, requires = "truth")]
    pub pred: Option<PathBuf>,
    #[arg(long, requires_all = ["tn", "fp", "fn_"])]
    pub tp: Option<u64>,
    #[arg(long)]
    pub tn: Option<u64>,
    #[arg(long)]
    pub fp: Option<u64>,
    #[arg(long = "fn")]
    pub fn_: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EarlyWarnArgs {
    /// Long CSV with columns `node_id,group,date,value`; group is west or east.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub window: usize,
    #[arg(long, default_value_t = 4)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 100)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 10)]
    pub lag_stride: usize,
    #[arg(long, default_value_t = 10)]
    pub time_step: usize,
    #[command(flatten)]
    pub mapping: MappingArgs,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Single-column `year` file of event years; adds a confusion record.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EarlyWarnArgs {
    pub fn warn_config(&self) -> WarnConfig {
        WarnConfig {
            window: self.window,
            embed_dim: self.embed_dim,
            max_lag: self.max_lag,
            lag_stride: self.lag_stride,
            time_step: self.time_step,
            nu: self.mapping.nu,
            tau: self.tau,
            form: self.mapping.form.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Feature CSV including the target column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub target: String,
    /// Subgroup labels, one per row.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Execute one parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Kernel(a) => commands::kernel(a),
        Command::Decide(a) => commands::decide(a),
        Command::Graph(a) => commands::graph(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Earlywarn(a) => commands::earlywarn(a),
        Command::Stability(a) => commands::stability(a),
    }
}

/// Size the global worker pool from `CKC_THREADS` when set.
pub fn configure_threads(value: Option<&str>) -> Result<()> {
    let Some(raw) = value else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::InvalidInput(e.to_string()))
}
