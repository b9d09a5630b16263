//! The u-centred sample mapping function and the pairwise dependence decision.
//!
//! For sample `i` the mapping builds, from the normalised u-centred distance
//! tensor `Z`, the profiles `V[ζ,γ] = |Z[ζ,γ,·] - Z[i,γ,·]|` and the outer-product
//! statistic `Σ_α Σ_β Σ_ζ V[ζ,α] V[ζ,β]ᵀ`, then subtracts the chi-square
//! threshold matrix `Γ(ν)`. The triple sum factorises as `Σ_ζ W_ζ W_ζᵀ` with
//! `W_ζ = Σ_γ V[ζ,γ]`, which is the production path; [`SampleMapper::phi_naive`]
//! keeps the literal triple sum as an oracle.
//!
//! Two forms of the first term are available, see [`MappingForm`].

mod quantile;

pub use quantile::{chi_square_quantile_1df, normal_quantile};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::distance_stats::{pairwise_distance_tensor, sum_fixed_order, u_center, SampleMatrix};
use crate::error::{CkcError, Result};

/// How the outer-product statistic is turned into the first term of the mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingForm {
    /// Profiles `W_ζ` are centred over `ζ`; the first term is `n · (n · R²)` where
    /// `R` is the correlation matrix of the centred profiles. Each off-diagonal
    /// entry then compares the one-degree-of-freedom statistic `n·R²` with
    /// `χ²_{1-ν}(1)`, amplified `n`-fold like `Γ(ν)`.
    #[default]
    Calibrated,
    /// The raw triple sum, uncentred and unscaled. Its entries grow like `n³`
    /// against a threshold growing like `n`, so off-diagonal entries are
    /// positive for practically any data.
    Literal,
}

impl std::str::FromStr for MappingForm {
    type Err = CkcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calibrated" => Ok(MappingForm::Calibrated),
            "literal" => Ok(MappingForm::Literal),
            other => Err(CkcError::InvalidArgument(format!(
                "unknown mapping form {other:?} (expected calibrated or literal)"
            ))),
        }
    }
}

/// `Γ(ν)`: zero diagonal, `n · χ²_{1-ν}(1)` everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMatrix {
    data: Array2<f64>,
    nu: f64,
}

impl ThresholdMatrix {
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// The common off-diagonal value (zero when `m == 1`, which validation excludes).
    pub fn off_diagonal(&self) -> f64 {
        self.data[[0, 1]]
    }
}

pub fn gamma_matrix(nu: f64, n: usize, m: usize) -> Result<ThresholdMatrix> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(CkcError::OutOfDomain {
            name: "nu",
            value: nu,
            domain: "(0, 1)",
        });
    }
    if n < SampleMatrix::MIN_SAMPLES {
        return Err(CkcError::DimensionTooSmall {
            required: SampleMatrix::MIN_SAMPLES,
            actual: n,
        });
    }
    if m < SampleMatrix::MIN_FEATURES {
        return Err(CkcError::DimensionTooSmall {
            required: SampleMatrix::MIN_FEATURES,
            actual: m,
        });
    }
    let threshold = n as f64 * chi_square_quantile_1df(1.0 - nu)?;
    let data = Array2::from_shape_fn((m, m), |(p, q)| if p == q { 0.0 } else { threshold });
    Ok(ThresholdMatrix { data, nu })
}

/// `Φ(S_i)`: an `m × m` symmetric matrix for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingMatrix {
    data: Array2<f64>,
    sample_index: usize,
    nu: f64,
}

impl MappingMatrix {
    /// Wraps an arbitrary square matrix, e.g. an averaged or rescaled mapping.
    pub fn from_parts(data: Array2<f64>, sample_index: usize, nu: f64) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(CkcError::DimensionMismatch { left: r, right: c });
        }
        Ok(Self {
            data,
            sample_index,
            nu,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn sample_index(&self) -> usize {
        self.sample_index
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn frobenius_inner(&self, other: &MappingMatrix) -> f64 {
        sum_fixed_order(self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_inner(self).sqrt()
    }
}

/// The normalised u-centred tensor, `Z[·,·,j] = C[·,·,j] / mean(H[·,·,j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTensor {
    slices: Vec<Array2<f64>>,
}

impl ZTensor {
    pub fn from_samples(samples: &SampleMatrix) -> Result<Self> {
        let tensor = pairwise_distance_tensor(samples);
        let slices = (0..tensor.n_features())
            .map(|j| {
                let mean = tensor.feature_mean(j);
                if mean <= 0.0 {
                    return Err(CkcError::DegenerateFeature { feature: j });
                }
                let centred = u_center(tensor.feature(j))?;
                Ok(centred.into_inner() / mean)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { slices })
    }

    pub fn n_samples(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn n_features(&self) -> usize {
        self.slices.len()
    }

    pub fn feature(&self, j: usize) -> &Array2<f64> {
        &self.slices[j]
    }
}

/// Everything needed to evaluate `Φ` for every sample of one data set.
#[derive(Debug, Clone)]
pub struct SampleMapper {
    z: ZTensor,
    gamma: ThresholdMatrix,
    form: MappingForm,
}

impl SampleMapper {
    pub fn new(samples: &SampleMatrix, nu: f64, form: MappingForm) -> Result<Self> {
        let gamma = gamma_matrix(nu, samples.n_samples(), samples.n_features())?;
        let z = ZTensor::from_samples(samples)?;
        Ok(Self { z, gamma, form })
    }

    pub fn n_samples(&self) -> usize {
        self.z.n_samples()
    }

    pub fn n_features(&self) -> usize {
        self.z.n_features()
    }

    pub fn nu(&self) -> f64 {
        self.gamma.nu
    }

    pub fn form(&self) -> MappingForm {
        self.form
    }

    pub fn gamma(&self) -> &ThresholdMatrix {
        &self.gamma
    }

    pub fn z(&self) -> &ZTensor {
        &self.z
    }

    fn check_sample(&self, i: usize) -> Result<()> {
        if i >= self.n_samples() {
            return Err(CkcError::IndexOutOfRange {
                index: i,
                len: self.n_samples(),
            });
        }
        Ok(())
    }

    /// `W[ζ, j] = Σ_γ |Z[ζ,γ,j] - Z[i,γ,j]|`, centred over `ζ` for the calibrated form.
    fn profiles(&self, i: usize) -> Array2<f64> {
        let (n, m) = (self.n_samples(), self.n_features());
        let mut w = Array2::<f64>::zeros((n, m));
        for j in 0..m {
            let slice = self.z.feature(j);
            let anchor = slice.row(i);
            for zeta in 0..n {
                let row = slice.row(zeta);
                w[[zeta, j]] = sum_fixed_order(row.iter().zip(anchor.iter()).map(|(a, b)| (a - b).abs()));
            }
        }
        if self.form == MappingForm::Calibrated {
            for mut column in w.columns_mut() {
                let mean = sum_fixed_order(column.iter().copied()) / n as f64;
                column.mapv_inplace(|v| v - mean);
            }
        }
        w
    }

    /// The outer-product statistic `Σ_ζ W_ζ W_ζᵀ` (factorised triple sum).
    pub fn outer_statistic(&self, i: usize) -> Result<Array2<f64>> {
        self.check_sample(i)?;
        let w = self.profiles(i);
        let m = self.n_features();
        let mut out = Array2::<f64>::zeros((m, m));
        for p in 0..m {
            for q in p..m {
                let v = sum_fixed_order(w.column(p).iter().zip(w.column(q).iter()).map(|(a, b)| a * b));
                out[[p, q]] = v;
                out[[q, p]] = v;
            }
        }
        Ok(out)
    }

    /// The literal triple sum `Σ_α Σ_β Σ_ζ V[ζ,α] V[ζ,β]ᵀ`, O(n³m²).
    pub fn outer_statistic_naive(&self, i: usize) -> Result<Array2<f64>> {
        self.check_sample(i)?;
        let (n, m) = (self.n_samples(), self.n_features());
        // v[(zeta * n + gamma) * m + j]
        let mut v = vec![0.0; n * n * m];
        for j in 0..m {
            let slice = self.z.feature(j);
            for zeta in 0..n {
                for gamma in 0..n {
                    v[(zeta * n + gamma) * m + j] = (slice[[zeta, gamma]] - slice[[i, gamma]]).abs();
                }
            }
        }
        if self.form == MappingForm::Calibrated {
            for gamma in 0..n {
                for j in 0..m {
                    let mean = (0..n).map(|zeta| v[(zeta * n + gamma) * m + j]).sum::<f64>() / n as f64;
                    for zeta in 0..n {
                        v[(zeta * n + gamma) * m + j] -= mean;
                    }
                }
            }
        }
        let mut out = Array2::<f64>::zeros((m, m));
        for alpha in 0..n {
            for beta in 0..n {
                for zeta in 0..n {
                    for p in 0..m {
                        for q in 0..m {
                            out[[p, q]] += v[(zeta * n + alpha) * m + p] * v[(zeta * n + beta) * m + q];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn finish(&self, statistic: Array2<f64>, i: usize) -> MappingMatrix {
        let first = match self.form {
            MappingForm::Literal => statistic,
            MappingForm::Calibrated => {
                let n = self.n_samples() as f64;
                let m = self.n_features();
                Array2::from_shape_fn((m, m), |(p, q)| {
                    let r = if p == q {
                        1.0
                    } else {
                        let denom = (statistic[[p, p]] * statistic[[q, q]]).sqrt();
                        // A constant profile carries no dependence information.
                        if denom > 0.0 {
                            statistic[[p, q]] / denom
                        } else {
                            0.0
                        }
                    };
                    n * n * r * r
                })
            }
        };
        MappingMatrix {
            data: first - self.gamma.data(),
            sample_index: i,
            nu: self.gamma.nu,
        }
    }

    pub fn phi(&self, i: usize) -> Result<MappingMatrix> {
        let statistic = self.outer_statistic(i)?;
        Ok(self.finish(statistic, i))
    }

    pub fn phi_naive(&self, i: usize) -> Result<MappingMatrix> {
        let statistic = self.outer_statistic_naive(i)?;
        Ok(self.finish(statistic, i))
    }

    /// `Φ(S_i)` for every sample, in sample order.
    pub fn all(&self) -> Vec<MappingMatrix> {
        let build = |i: usize| self.phi(i).expect("index in range");
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..self.n_samples()).into_par_iter().map(build).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..self.n_samples()).map(build).collect()
        }
    }

    /// `Σ_i Φ(S_i)`, accumulated in sample order.
    pub fn aggregate(&self) -> Array2<f64> {
        let m = self.n_features();
        self.all()
            .iter()
            .fold(Array2::zeros((m, m)), |acc, phi| acc + phi.data())
    }
}

/// `Φ(S_i)` with the default (calibrated) form.
pub fn phi(samples: &SampleMatrix, i: usize, nu: f64) -> Result<MappingMatrix> {
    SampleMapper::new(samples, nu, MappingForm::default())?.phi(i)
}

/// Literal triple-sum evaluation of `Φ(S_i)`; an oracle for [`phi`].
pub fn phi_naive(samples: &SampleMatrix, i: usize, nu: f64) -> Result<MappingMatrix> {
    SampleMapper::new(samples, nu, MappingForm::default())?.phi_naive(i)
}

pub fn aggregate_phi(samples: &SampleMatrix, nu: f64) -> Result<Array2<f64>> {
    Ok(SampleMapper::new(samples, nu, MappingForm::default())?.aggregate())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dependence {
    Dependent,
    Independent,
}

impl Dependence {
    /// Positive aggregate means dependent; zero falls on the independent side.
    pub fn from_aggregate(value: f64) -> Self {
        if value > 0.0 {
            Dependence::Dependent
        } else {
            Dependence::Independent
        }
    }
}

/// Pairwise verdict from the sign of `Σ_i Φ(S_i)[p, q]`.
pub fn dependence_decision(samples: &SampleMatrix, p: usize, q: usize, nu: f64) -> Result<Dependence> {
    dependence_decision_with(&SampleMapper::new(samples, nu, MappingForm::default())?, p, q)
}

pub fn dependence_decision_with(mapper: &SampleMapper, p: usize, q: usize) -> Result<Dependence> {
    let m = mapper.n_features();
    for idx in [p, q] {
        if idx >= m {
            return Err(CkcError::IndexOutOfRange { index: idx, len: m });
        }
    }
    if p == q {
        return Err(CkcError::InvalidArgument(format!(
            "dependence decision needs two distinct features, got {p} twice"
        )));
    }
    Ok(Dependence::from_aggregate(mapper.aggregate()[[p, q]]))
}
