//! Causal kernel clustering.
//!
//! Each sample is mapped to an `m × m` matrix that compares a u-centred
//! distance-dependence statistic between every feature pair against a
//! chi-square critical value. Cosine similarity of those matrices gives a
//! kernel over samples, and kernel k-means on that kernel finds subgroups that
//! share a causal mechanism. Around the core sit graph-space utilities, a
//! structural-equation data generator, evaluation metrics, a lagged-kernel
//! early-warning pipeline for two groups of time series, and a subgroup
//! coefficient-stability analysis.
//!
//! ```
//! use ckc_core::synth::two_group_benchmark;
//! use ckc_core::clustering::cluster_pipeline;
//! use ckc_core::eval_metrics::adjusted_rand_index;
//!
//! let bench = two_group_benchmark(20, 4, 1).unwrap();
//! let fit = cluster_pipeline(&bench.samples, 2, 0.05, 7).unwrap();
//! let ari = adjusted_rand_index(&bench.labels, &fit.labels).unwrap();
//! assert!((-1.0..=1.0).contains(&ari));
//! ```

pub mod causal_kernel;
pub mod causal_mapping;
pub mod clustering;
pub mod distance_stats;
pub mod early_warning;
pub mod error;
pub mod eval_metrics;
pub mod graph_space;
pub mod stability;
pub mod synth;

pub use causal_kernel::{kappa, kernel_matrix, KernelMatrix};
pub use causal_mapping::{aggregate_phi, dependence_decision, phi, Dependence, MappingForm, MappingMatrix, SampleMapper};
pub use clustering::{cluster_pipeline, kernel_kmeans, ClusterAssignment};
pub use distance_stats::SampleMatrix;
pub use error::{CkcError, Result};
