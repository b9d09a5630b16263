//! Kernel k-means over a precomputed Gram matrix.
//!
//! Squared distances live in the implicit feature space:
//! `d²(i, c) = K[i,i] - (2/|c|) Σ_{j∈c} K[i,j] + (1/|c|²) Σ_{j,j'∈c} K[j,j']`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::causal_kernel::{kernel_matrix_with, KernelMatrix};
use crate::causal_mapping::MappingForm;
use crate::distance_stats::{sum_fixed_order, SampleMatrix};
use crate::error::{CkcError, Result};

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Final objective: summed squared feature-space distance to the own centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Objective after seeding and after every update; non-increasing up to rounding.
    pub inertia_history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Per-cluster sufficient statistics for the kernel distance.
struct Centroids {
    sizes: Vec<usize>,
    /// `(1/|c|²) Σ_{j,j'∈c} K[j,j']`
    self_terms: Vec<f64>,
    /// `cross[i][c] = Σ_{j∈c} K[i,j]`
    cross: Array2<f64>,
}

impl Centroids {
    fn new(gram: &Array2<f64>, labels: &[usize], k: usize) -> Self {
        let n = labels.len();
        let mut sizes = vec![0usize; k];
        for &l in labels {
            sizes[l] += 1;
        }
        let mut cross = Array2::<f64>::zeros((n, k));
        for i in 0..n {
            for j in 0..n {
                cross[[i, labels[j]]] += gram[[i, j]];
            }
        }
        let mut self_terms = vec![0.0; k];
        for c in 0..k {
            if sizes[c] > 0 {
                let total = sum_fixed_order((0..n).filter(|&j| labels[j] == c).map(|j| cross[[j, c]]));
                self_terms[c] = total / (sizes[c] * sizes[c]) as f64;
            }
        }
        Self {
            sizes,
            self_terms,
            cross,
        }
    }

    /// `None` for an empty cluster.
    fn distance(&self, gram: &Array2<f64>, i: usize, c: usize) -> Option<f64> {
        let size = self.sizes[c];
        if size == 0 {
            return None;
        }
        let d = gram[[i, i]] - 2.0 * self.cross[[i, c]] / size as f64 + self.self_terms[c];
        Some(d.max(0.0))
    }

    fn nearest(&self, gram: &Array2<f64>, i: usize) -> usize {
        let mut best = (usize::MAX, f64::INFINITY);
        for c in 0..self.sizes.len() {
            if let Some(d) = self.distance(gram, i, c) {
                // Strict comparison keeps the lowest index on ties.
                if d < best.1 {
                    best = (c, d);
                }
            }
        }
        best.0
    }

    fn objective(&self, gram: &Array2<f64>, labels: &[usize]) -> f64 {
        sum_fixed_order(
            labels
                .iter()
                .enumerate()
                .map(|(i, &c)| self.distance(gram, i, c).unwrap_or(0.0)),
        )
    }
}

fn validate(gram: &Array2<f64>, k: usize, max_iter: usize) -> Result<usize> {
    let (r, c) = gram.dim();
    if r != c {
        return Err(CkcError::DimensionMismatch { left: r, right: c });
    }
    if r == 0 {
        return Err(CkcError::EmptyInput);
    }
    if k < 2 || k > r {
        return Err(CkcError::BadK { k, n: r });
    }
    if max_iter == 0 {
        return Err(CkcError::InvalidArgument("max_iter must be at least 1".into()));
    }
    Ok(r)
}

fn pair_distance(gram: &Array2<f64>, i: usize, j: usize) -> f64 {
    (gram[[i, i]] + gram[[j, j]] - 2.0 * gram[[i, j]]).max(0.0)
}

/// k-means++ seeding on kernel distances. Falls back to the lowest-index unused
/// point when every remaining point coincides with a chosen seed.
fn seed_centres(gram: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = gram.nrows();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| pair_distance(gram, i, seeds[0])).collect();
    while seeds.len() < k {
        let total = sum_fixed_order(nearest.iter().copied());
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave the target at the very end of the cumulative sum.
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            (0..n).find(|i| !seeds.contains(i)).expect("k <= n")
        };
        seeds.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(pair_distance(gram, i, next));
        }
    }
    seeds
}

fn assign(gram: &Array2<f64>, centroids: &Centroids) -> Vec<usize> {
    let n = gram.nrows();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(|i| centroids.nearest(gram, i)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(|i| centroids.nearest(gram, i)).collect()
    }
}

/// Moves, for each empty cluster in index order, the point farthest from its own
/// centroid (among clusters with more than one member) into that cluster.
fn repair_empty(gram: &Array2<f64>, labels: &mut [usize], k: usize) -> Centroids {
    let mut centroids = Centroids::new(gram, labels, k);
    for c in 0..k {
        if centroids.sizes[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &own) in labels.iter().enumerate() {
            if centroids.sizes[own] < 2 {
                continue;
            }
            let d = centroids.distance(gram, i, own).unwrap_or(0.0);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            log::debug!("reseeding empty cluster {c} with point {i}");
            labels[i] = c;
            centroids = Centroids::new(gram, labels, k);
        }
    }
    centroids
}

/// Lloyd-style kernel k-means on an arbitrary symmetric Gram matrix.
pub fn kernel_kmeans_gram(gram: &Array2<f64>, k: usize, seed: u64, max_iter: usize) -> Result<ClusterAssignment> {
    validate(gram, k, max_iter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = seed_centres(gram, k, &mut rng);

    // Initial partition: nearest seed, ties to the lowest cluster index.
    let mut labels: Vec<usize> = (0..gram.nrows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (c, &s) in seeds.iter().enumerate() {
                let d = pair_distance(gram, i, s);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect();
    let mut centroids = repair_empty(gram, &mut labels, k);
    let mut history = vec![centroids.objective(gram, &labels)];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut next = assign(gram, &centroids);
        let next_centroids = repair_empty(gram, &mut next, k);
        let objective = next_centroids.objective(gram, &next);
        // Guard against rounding-level oscillation between equal-cost partitions.
        if next == labels || objective > *history.last().expect("non-empty") {
            break;
        }
        labels = next;
        centroids = next_centroids;
        history.push(objective);
    }

    Ok(ClusterAssignment {
        labels,
        k,
        inertia: *history.last().expect("non-empty"),
        iterations,
        inertia_history: history,
    })
}

pub fn kernel_kmeans(kernel: &KernelMatrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusterAssignment> {
    kernel_kmeans_gram(kernel.data(), k, seed, max_iter)
}

/// Ordinary k-means on raw feature rows, run through the linear Gram matrix.
pub fn feature_kmeans(samples: &SampleMatrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusterAssignment> {
    let x = samples.data();
    kernel_kmeans_gram(&x.dot(&x.t()), k, seed, max_iter)
}

/// `Φ → κ → kernel k-means` with the default mapping form and iteration cap.
pub fn cluster_pipeline(samples: &SampleMatrix, k: usize, nu: f64, seed: u64) -> Result<ClusterAssignment> {
    cluster_pipeline_with(samples, k, nu, seed, DEFAULT_MAX_ITER, MappingForm::default())
}

pub fn cluster_pipeline_with(
    samples: &SampleMatrix,
    k: usize,
    nu: f64,
    seed: u64,
    max_iter: usize,
    form: MappingForm,
) -> Result<ClusterAssignment> {
    if k < 2 || k > samples.n_samples() {
        return Err(CkcError::BadK {
            k,
            n: samples.n_samples(),
        });
    }
    let kernel = kernel_matrix_with(samples, nu, form)?;
    kernel_kmeans(&kernel, k, seed, max_iter)
}
