//! The nonlinear causal kernel: cosine similarity of mapping matrices under the
//! Frobenius inner product, its Gram matrix, and the set-level heterogeneity test.

use ndarray::Array2;

use crate::causal_mapping::{MappingForm, MappingMatrix, SampleMapper};
use crate::distance_stats::{sum_fixed_order, SampleMatrix};
use crate::error::{CkcError, Result};

/// `κ(A, B) = ⟨A, B⟩_F / (‖A‖_F ‖B‖_F)`, clamped to `[-1, 1]`.
pub fn kappa(a: &MappingMatrix, b: &MappingMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CkcError::FeatureCountMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let na = a.frobenius_norm();
    if na == 0.0 {
        return Err(CkcError::ZeroNorm {
            sample: Some(a.sample_index()),
        });
    }
    let nb = b.frobenius_norm();
    if nb == 0.0 {
        return Err(CkcError::ZeroNorm {
            sample: Some(b.sample_index()),
        });
    }
    Ok((a.frobenius_inner(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Symmetric `n × n` Gram matrix of `κ` with an exact unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    data: Array2<f64>,
    nu: f64,
}

impl KernelMatrix {
    /// Wraps a precomputed kernel after checking shape, symmetry and range.
    pub fn from_array(data: Array2<f64>, nu: f64) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(CkcError::DimensionMismatch { left: r, right: c });
        }
        if r == 0 {
            return Err(CkcError::EmptyInput);
        }
        for i in 0..r {
            for j in 0..r {
                let v = data[[i, j]];
                if !v.is_finite() || v.abs() > 1.0 + 1e-12 || (v - data[[j, i]]).abs() > 1e-12 {
                    return Err(CkcError::InvalidArgument(format!(
                        "kernel entry ({i}, {j}) = {v} is not a symmetric value in [-1, 1]"
                    )));
                }
            }
        }
        Ok(Self { data, nu })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }
}

/// Unit-normalised copies of the mappings, failing on the first zero norm.
fn normalise(mappings: &[MappingMatrix]) -> Result<Vec<Array2<f64>>> {
    mappings
        .iter()
        .map(|phi| {
            let norm = phi.frobenius_norm();
            if norm == 0.0 {
                return Err(CkcError::ZeroNorm {
                    sample: Some(phi.sample_index()),
                });
            }
            Ok(phi.data() / norm)
        })
        .collect()
}

fn unit_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    sum_fixed_order(a.iter().zip(b.iter()).map(|(x, y)| x * y)).clamp(-1.0, 1.0)
}

/// Kernel over precomputed mapping matrices; each `Φ` is normalised once.
pub fn kernel_from_mappings(mappings: &[MappingMatrix], nu: f64) -> Result<KernelMatrix> {
    let n = mappings.len();
    if n == 0 {
        return Err(CkcError::EmptyInput);
    }
    let m = mappings[0].dim();
    if let Some(bad) = mappings.iter().find(|phi| phi.dim() != m) {
        return Err(CkcError::FeatureCountMismatch {
            left: m,
            right: bad.dim(),
        });
    }
    let units = normalise(mappings)?;
    let row = |i: usize| -> Vec<f64> { (i + 1..n).map(|j| unit_inner(&units[i], &units[j])).collect() };
    #[cfg(feature = "parallel")]
    let upper: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let upper: Vec<Vec<f64>> = (0..n).map(row).collect();

    let mut data = Array2::<f64>::eye(n);
    for (i, values) in upper.into_iter().enumerate() {
        for (offset, v) in values.into_iter().enumerate() {
            let j = i + 1 + offset;
            data[[i, j]] = v;
            data[[j, i]] = v;
        }
    }
    Ok(KernelMatrix { data, nu })
}

pub fn kernel_from_mapper(mapper: &SampleMapper) -> Result<KernelMatrix> {
    kernel_from_mappings(&mapper.all(), mapper.nu())
}

/// `K[i, i'] = κ(Φ(S_i), Φ(S_i'))` with the default mapping form.
pub fn kernel_matrix(samples: &SampleMatrix, nu: f64) -> Result<KernelMatrix> {
    kernel_matrix_with(samples, nu, MappingForm::default())
}

pub fn kernel_matrix_with(samples: &SampleMatrix, nu: f64, form: MappingForm) -> Result<KernelMatrix> {
    kernel_from_mapper(&SampleMapper::new(samples, nu, form)?)
}

/// Sum of cross-set kernel values `Σ_i Σ_i' κ(Φ(S_i), Φ(S2_i'))`.
///
/// Each set's mappings are built from that set alone.
pub fn cross_kappa_sum(samples: &SampleMatrix, other: &SampleMatrix, nu: f64, form: MappingForm) -> Result<f64> {
    if samples.n_features() != other.n_features() {
        return Err(CkcError::FeatureCountMismatch {
            left: samples.n_features(),
            right: other.n_features(),
        });
    }
    let a = normalise(&SampleMapper::new(samples, nu, form)?.all())?;
    let b = normalise(&SampleMapper::new(other, nu, form)?.all())?;
    Ok(sum_fixed_order(
        a.iter().flat_map(|x| b.iter().map(move |y| unit_inner(x, y))),
    ))
}

/// True (heterogeneous) iff the cross-set kernel sum is strictly negative.
pub fn heterogeneity_decision(samples: &SampleMatrix, other: &SampleMatrix, nu: f64) -> Result<bool> {
    Ok(cross_kappa_sum(samples, other, nu, MappingForm::default())? < 0.0)
}

/// Mean kernel value between every pair of label blocks; diagonal blocks skip `i == i'`.
///
/// Entry `[a, b]` is `NaN` when the block has no admissible pair.
pub fn block_means(kernel: &KernelMatrix, labels: &[usize]) -> Result<Array2<f64>> {
    let n = kernel.n();
    if labels.len() != n {
        return Err(CkcError::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let k = labels.iter().copied().max().map_or(0, |v| v + 1);
    let mut sums = Array2::<f64>::zeros((k, k));
    let mut counts = Array2::<f64>::zeros((k, k));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sums[[labels[i], labels[j]]] += kernel.data()[[i, j]];
                counts[[labels[i], labels[j]]] += 1.0;
            }
        }
    }
    Ok(Array2::from_shape_fn((k, k), |(a, b)| {
        if counts[[a, b]] > 0.0 {
            sums[[a, b]] / counts[[a, b]]
        } else {
            f64::NAN
        }
    }))
}

/// `(mean within-block κ, mean cross-block κ)` over off-diagonal pairs.
pub fn within_cross_means(kernel: &KernelMatrix, labels: &[usize]) -> Result<(f64, f64)> {
    let n = kernel.n();
    if labels.len() != n {
        return Err(CkcError::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let (mut within, mut nw, mut cross, mut nc) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = kernel.data()[[i, j]];
            if labels[i] == labels[j] {
                within += v;
                nw += 1;
            } else {
                cross += v;
                nc += 1;
            }
        }
    }
    let mean = |s: f64, c: usize| if c == 0 { f64::NAN } else { s / c as f64 };
    Ok((mean(within, nw), mean(cross, nc)))
}
