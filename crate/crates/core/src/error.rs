//! Error type shared by every module of the crate.
//!
//! Variant names are stable: the command-line front end reports them verbatim
//! in its machine-readable error records.

use thiserror::Error;

/// Errors raised by the causal kernel clustering toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CkcError {
    /// A matrix or vector is smaller than the operation requires.
    #[error("dimension {actual} is too small (need at least {required})")]
    DimensionTooSmall { required: usize, actual: usize },

    /// Two operands disagree on shape.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A sample matrix failed validation.
    #[error("invalid sample matrix: {0}")]
    InvalidSampleMatrix(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// A feature has zero spread, so its normalised distances are undefined.
    #[error("feature {feature} is degenerate (zero distance spread)")]
    DegenerateFeature { feature: usize },

    /// A real argument lies outside its admissible domain.
    #[error("{name} = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// A mapping matrix has zero Frobenius norm; `sample` names the offending row when known.
    #[error("mapping matrix has zero Frobenius norm (sample {sample:?})")]
    ZeroNorm { sample: Option<usize> },

    #[error("feature count mismatch: {left} vs {right}")]
    FeatureCountMismatch { left: usize, right: usize },

    /// Requested cluster count is outside `2..=n`.
    #[error("cluster count k = {k} invalid for {n} points")]
    BadK { k: usize, n: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("graph with {nodes} nodes exceeds the exact longest-path limit of {limit}")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error("node count mismatch: {left} vs {right}")]
    NodeCountMismatch { left: usize, right: usize },

    #[error("graph is not acyclic")]
    CyclicGraph,

    /// An edge refers to a node outside the graph, is a self-loop or is duplicated.
    #[error("invalid edge {parent} -> {child}: {reason}")]
    InvalidEdge {
        parent: usize,
        child: usize,
        reason: &'static str,
    },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A confusion-matrix metric has a zero denominator.
    #[error("metric {metric} has a zero denominator")]
    ZeroDenominator { metric: &'static str },

    #[error("window ending at {t_end} with width {window} does not fit a series of length {len}")]
    WindowOutOfRange {
        t_end: usize,
        window: usize,
        len: usize,
    },

    #[error("window of {window} with embedding dimension {embed_dim} yields {rows} rows (need at least 4)")]
    TooFewEmbeddedSamples {
        window: usize,
        embed_dim: usize,
        rows: usize,
    },

    #[error("need at least {required} distinct years, got {actual}")]
    TooFewYears { required: usize, actual: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("every subgroup has too few samples for a regression with {features} features")]
    AllSubgroupsTooSmall { features: usize },

    #[error("need at least {required} subgroups, got {actual}")]
    TooFewSubgroups { required: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl CkcError {
    /// The variant name, used as the machine-readable error code.
    pub fn name(&self) -> &'static str {
        match self {
            CkcError::DimensionTooSmall { .. } => "DimensionTooSmall",
            CkcError::DimensionMismatch { .. } => "DimensionMismatch",
            CkcError::InvalidSampleMatrix(_) => "InvalidSampleMatrix",
            CkcError::IndexOutOfRange { .. } => "IndexOutOfRange",
            CkcError::DegenerateFeature { .. } => "DegenerateFeature",
            CkcError::OutOfDomain { .. } => "OutOfDomain",
            CkcError::ZeroNorm { .. } => "ZeroNorm",
            CkcError::FeatureCountMismatch { .. } => "FeatureCountMismatch",
            CkcError::BadK { .. } => "BadK",
            CkcError::EmptyInput => "EmptyInput",
            CkcError::GraphTooLarge { .. } => "GraphTooLarge",
            CkcError::NodeCountMismatch { .. } => "NodeCountMismatch",
            CkcError::CyclicGraph => "CyclicGraph",
            CkcError::InvalidEdge { .. } => "InvalidEdge",
            CkcError::ShapeMismatch { .. } => "ShapeMismatch",
            CkcError::LengthMismatch { .. } => "LengthMismatch",
            CkcError::ZeroDenominator { .. } => "ZeroDenominator",
            CkcError::WindowOutOfRange { .. } => "WindowOutOfRange",
            CkcError::TooFewEmbeddedSamples { .. } => "TooFewEmbeddedSamples",
            CkcError::TooFewYears { .. } => "TooFewYears",
            CkcError::ZeroVariance => "ZeroVariance",
            CkcError::AllSubgroupsTooSmall { .. } => "AllSubgroupsTooSmall",
            CkcError::TooFewSubgroups { .. } => "TooFewSubgroups",
            CkcError::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, CkcError>;
