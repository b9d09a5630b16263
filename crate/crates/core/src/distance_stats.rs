//! Pairwise distance tensors, u-centring and unbiased distance covariance.
//!
//! The u-centred inner product is the unbiased estimator of squared distance
//! covariance: off-diagonal products summed and divided by `d(d-3)`, with the
//! diagonal of every u-centred matrix forced to zero.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{CkcError, Result};

/// An `n × m` matrix of samples (rows) by features (columns).
///
/// Always has `n >= 4`, `m >= 2` and only finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Array2<f64>,
}

impl SampleMatrix {
    pub const MIN_SAMPLES: usize = 4;
    pub const MIN_FEATURES: usize = 2;

    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, m) = data.dim();
        if n < Self::MIN_SAMPLES {
            return Err(CkcError::InvalidSampleMatrix(format!(
                "{n} samples, need at least {}",
                Self::MIN_SAMPLES
            )));
        }
        if m < Self::MIN_FEATURES {
            return Err(CkcError::InvalidSampleMatrix(format!(
                "{m} features, need at least {}",
                Self::MIN_FEATURES
            )));
        }
        if let Some(((i, j), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(CkcError::InvalidSampleMatrix(format!(
                "non-finite value {v} at row {i}, column {j}"
            )));
        }
        Ok(Self { data })
    }

    /// Builds a matrix from row vectors of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(CkcError::InvalidSampleMatrix(format!(
                "row {bad} has {} values, expected {m}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((n, m), flat)
            .map_err(|e| CkcError::InvalidSampleMatrix(e.to_string()))?;
        Self::new(data)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.data.column(j)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples()) {
            return Err(CkcError::IndexOutOfRange {
                index: bad,
                len: self.n_samples(),
            });
        }
        Self::new(self.data.select(Axis(0), rows))
    }

    pub(crate) fn check_feature(&self, j: usize) -> Result<()> {
        if j >= self.n_features() {
            return Err(CkcError::IndexOutOfRange {
                index: j,
                len: self.n_features(),
            });
        }
        Ok(())
    }
}

/// Per-feature pairwise absolute-difference matrices, `H[i, i', j] = |S[i,j] - S[i',j]|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTensor {
    slices: Vec<Array2<f64>>,
}

impl DistanceTensor {
    pub fn n_samples(&self) -> usize {
        self.slices.first().map_or(0, Array2::nrows)
    }

    pub fn n_features(&self) -> usize {
        self.slices.len()
    }

    /// The `n × n` distance matrix of feature `j`.
    pub fn feature(&self, j: usize) -> &Array2<f64> {
        &self.slices[j]
    }

    pub fn get(&self, i: usize, i2: usize, j: usize) -> f64 {
        self.slices[j][[i, i2]]
    }

    /// Mean over all `n²` entries of feature `j`'s slice, zero diagonal included.
    pub fn feature_mean(&self, j: usize) -> f64 {
        let slice = &self.slices[j];
        sum_fixed_order(slice.iter().copied()) / slice.len() as f64
    }
}

/// A u-centred square matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UCenteredMatrix {
    data: Array2<f64>,
}

impl UCenteredMatrix {
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// Entrywise sum; u-centring is linear so the result is again u-centred.
    pub fn add(&self, other: &UCenteredMatrix) -> Result<UCenteredMatrix> {
        if self.dim() != other.dim() {
            return Err(CkcError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(UCenteredMatrix {
            data: &self.data + &other.data,
        })
    }

    pub fn scale(&self, factor: f64) -> UCenteredMatrix {
        UCenteredMatrix {
            data: &self.data * factor,
        }
    }
}

// Sequential left-to-right accumulation keeps results identical across platforms.
pub(crate) fn sum_fixed_order(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc + v)
}

/// Absolute-difference matrix of a single vector.
pub fn pairwise_distance_matrix(x: ArrayView1<'_, f64>) -> Array2<f64> {
    let n = x.len();
    Array2::from_shape_fn((n, n), |(s, t)| (x[s] - x[t]).abs())
}

pub fn pairwise_distance_tensor(samples: &SampleMatrix) -> DistanceTensor {
    let slices = (0..samples.n_features())
        .map(|j| pairwise_distance_matrix(samples.column(j)))
        .collect();
    DistanceTensor { slices }
}

/// U-centres a `d × d` matrix with the four-term formula and zeroes the diagonal.
pub fn u_center(matrix: &Array2<f64>) -> Result<UCenteredMatrix> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(CkcError::DimensionMismatch {
            left: rows,
            right: cols,
        });
    }
    let d = rows;
    if d < 3 {
        return Err(CkcError::DimensionTooSmall {
            required: 3,
            actual: d,
        });
    }
    let row_sums: Vec<f64> = matrix
        .rows()
        .into_iter()
        .map(|r| sum_fixed_order(r.iter().copied()))
        .collect();
    let col_sums: Vec<f64> = matrix
        .columns()
        .into_iter()
        .map(|c| sum_fixed_order(c.iter().copied()))
        .collect();
    let total = sum_fixed_order(row_sums.iter().copied());
    let df = d as f64;
    let grand = total / ((df - 1.0) * (df - 2.0));
    let data = Array2::from_shape_fn((d, d), |(s, t)| {
        if s == t {
            0.0
        } else {
            matrix[[s, t]] - col_sums[t] / (df - 2.0) - row_sums[s] / (df - 2.0) + grand
        }
    });
    Ok(UCenteredMatrix { data })
}

/// Unbiased inner product of two u-centred matrices: off-diagonal products over `d(d-3)`.
pub fn ucentered_inner(a: &UCenteredMatrix, b: &UCenteredMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CkcError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let d = a.dim();
    if d < 4 {
        return Err(CkcError::DimensionTooSmall {
            required: 4,
            actual: d,
        });
    }
    let products = a
        .data
        .indexed_iter()
        .filter(|((s, t), _)| s != t)
        .map(|((s, t), &v)| v * b.data[[s, t]]);
    Ok(sum_fixed_order(products) / (d as f64 * (d as f64 - 3.0)))
}

/// Unbiased squared distance covariance of two equally long vectors.
pub fn dcov_u(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CkcError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 4 {
        return Err(CkcError::DimensionTooSmall {
            required: 4,
            actual: x.len(),
        });
    }
    let a = u_center(&pairwise_distance_matrix(x))?;
    let b = u_center(&pairwise_distance_matrix(y))?;
    ucentered_inner(&a, &b)
}

/// `Σ_α Ã_α` where `A_α` is the distance matrix of column `α` of a feature's distance slice.
///
/// Summing before the inner product turns the double sum over `(α, β)` into a
/// single inner product (bilinearity), O(n³) instead of O(n⁴).
pub fn marginal_ucentered_sum(distances: &Array2<f64>) -> Result<UCenteredMatrix> {
    let n = distances.nrows();
    let mut acc = Array2::<f64>::zeros((n, n));
    for column in distances.columns() {
        let centred = u_center(&pairwise_distance_matrix(column))?;
        acc += centred.data();
    }
    Ok(UCenteredMatrix { data: acc })
}

/// Marginal distance covariance between features `p` and `q`.
pub fn mdcov(samples: &SampleMatrix, p: usize, q: usize) -> Result<f64> {
    samples.check_feature(p)?;
    samples.check_feature(q)?;
    let tensor = pairwise_distance_tensor(samples);
    let sum_p = marginal_ucentered_sum(tensor.feature(p))?;
    if p == q {
        return ucentered_inner(&sum_p, &sum_p);
    }
    let sum_q = marginal_ucentered_sum(tensor.feature(q))?;
    ucentered_inner(&sum_p, &sum_q)
}

/// Marginal distance correlation, `mdcov(p,q) / sqrt(mdcov(p,p) · mdcov(q,q))`.
pub fn mdcor(samples: &SampleMatrix, p: usize, q: usize) -> Result<f64> {
    samples.check_feature(p)?;
    samples.check_feature(q)?;
    let tensor = pairwise_distance_tensor(samples);
    let sum_p = marginal_ucentered_sum(tensor.feature(p))?;
    let sum_q = marginal_ucentered_sum(tensor.feature(q))?;
    let pp = ucentered_inner(&sum_p, &sum_p)?;
    if pp <= 0.0 {
        return Err(CkcError::DegenerateFeature { feature: p });
    }
    let qq = ucentered_inner(&sum_q, &sum_q)?;
    if qq <= 0.0 {
        return Err(CkcError::DegenerateFeature { feature: q });
    }
    Ok(ucentered_inner(&sum_p, &sum_q)? / (pp * qq).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SampleMatrix {
        SampleMatrix::new(Array2::from_shape_fn((n, m), |_| rng.random_range(-2.0..2.0))).unwrap()
    }

    // Literal Σ_α Σ_β dCov²(P_α, Q_β).
    fn mdcov_naive(samples: &SampleMatrix, p: usize, q: usize) -> f64 {
        let tensor = pairwise_distance_tensor(samples);
        let (hp, hq) = (tensor.feature(p), tensor.feature(q));
        let mut total = 0.0;
        for alpha in hp.columns() {
            for beta in hq.columns() {
                total += dcov_u(alpha, beta).unwrap();
            }
        }
        total
    }

    #[test]
    fn sample_matrix_validation() {
        assert!(SampleMatrix::new(Array2::zeros((3, 2))).is_err());
        assert!(SampleMatrix::new(Array2::zeros((4, 1))).is_err());
        let mut bad = Array2::zeros((4, 2));
        bad[[2, 1]] = f64::NAN;
        let err = SampleMatrix::new(bad).unwrap_err();
        assert_eq!(err.name(), "InvalidSampleMatrix");
        assert!(SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn distance_slice_of_three_points() {
        let h = pairwise_distance_matrix(array![1.0, 2.0, 4.0].view());
        assert_eq!(h, array![[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]]);
    }

    #[test]
    fn constant_column_gives_zero_slice() {
        let s = SampleMatrix::new(array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [9.0, 5.0]]).unwrap();
        let h = pairwise_distance_tensor(&s);
        assert!(h.feature(1).iter().all(|&v| v == 0.0));
        for i in 0..4 {
            assert_eq!(h.get(i, i, 0), 0.0);
        }
    }

    #[test]
    fn u_center_rejects_small_and_non_square() {
        assert_eq!(
            u_center(&Array2::zeros((2, 2))).unwrap_err(),
            CkcError::DimensionTooSmall {
                required: 3,
                actual: 2
            }
        );
        assert!(u_center(&Array2::zeros((3, 4))).is_err());
    }

    #[test]
    fn u_center_zero_matrix() {
        let c = u_center(&Array2::zeros((5, 5))).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn u_center_three_points_is_zero() {
        // With d = 3 each row has two off-diagonal entries that must cancel pairwise.
        let c = u_center(&array![[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]]).unwrap();
        assert!(c.data().iter().all(|v| v.abs() < 1e-15), "{c:?}");
    }

    #[test]
    fn u_center_constant_off_diagonal() {
        for d in 3..=10 {
            let c = 2.5;
            let zero_diag = Array2::from_shape_fn((d, d), |(s, t)| if s == t { 0.0 } else { c });
            let centred = u_center(&zero_diag).unwrap();
            assert!(centred.data().iter().all(|v| v.abs() < 1e-12));

            let all_constant = Array2::from_elem((d, d), c);
            let centred = u_center(&all_constant).unwrap();
            let expected = -c / (d as f64 - 1.0);
            for ((s, t), &v) in centred.data().indexed_iter() {
                if s == t {
                    assert_eq!(v, 0.0);
                } else {
                    assert!((v - expected).abs() < 1e-12, "d={d}: {v} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn u_centered_rows_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 3..12 {
            let x = Array1::from_shape_fn(d, |_| rng.random_range(-5.0..5.0));
            let c = u_center(&pairwise_distance_matrix(x.view())).unwrap();
            let max = c.data().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
            for row in c.data().rows() {
                assert!(row.sum().abs() <= 1e-9 * d as f64 * max);
            }
            for col in c.data().columns() {
                assert!(col.sum().abs() <= 1e-9 * d as f64 * max);
            }
        }
    }

    #[test]
    fn inner_product_requires_four() {
        let a = u_center(&Array2::zeros((3, 3))).unwrap();
        assert_eq!(ucentered_inner(&a, &a).unwrap_err().name(), "DimensionTooSmall");
        let b = u_center(&Array2::zeros((4, 4))).unwrap();
        assert_eq!(ucentered_inner(&a, &b).unwrap_err().name(), "DimensionMismatch");
        assert_eq!(ucentered_inner(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn dcov_of_one_to_four() {
        let x = array![1.0, 2.0, 3.0, 4.0];
        let v = dcov_u(x.view(), x.view()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn dcov_constant_is_zero() {
        let x = array![3.0, 3.0, 3.0, 3.0, 3.0];
        let y = array![1.0, -2.0, 0.5, 7.0, 2.0];
        assert_eq!(dcov_u(x.view(), y.view()).unwrap(), 0.0);
        assert!(dcov_u(x.slice(ndarray::s![..3]), y.slice(ndarray::s![..3])).is_err());
    }

    #[test]
    fn mdcov_factorised_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 4..=8 {
            let s = random_samples(&mut rng, n, 2);
            let fast = mdcov(&s, 0, 1).unwrap();
            let slow = mdcov_naive(&s, 0, 1);
            assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1e-12), "n={n}: {fast} vs {slow}");
        }
    }

    #[test]
    fn mdcov_symmetry_and_constant_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_samples(&mut rng, 9, 3);
        assert_eq!(mdcov(&s, 0, 2).unwrap(), mdcov(&s, 2, 0).unwrap());
        let mut data = s.data().clone();
        data.column_mut(1).fill(4.0);
        let s = SampleMatrix::new(data).unwrap();
        assert_eq!(mdcov(&s, 1, 0).unwrap(), 0.0);
        assert_eq!(mdcor(&s, 1, 0).unwrap_err(), CkcError::DegenerateFeature { feature: 1 });
        assert_eq!(mdcov(&s, 3, 0).unwrap_err().name(), "IndexOutOfRange");
    }

    #[test]
    fn mdcor_self_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_samples(&mut rng, 10, 3);
        assert!((mdcor(&s, 1, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((mdcor(&s, 0, 2).unwrap() - mdcor(&s, 2, 0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mdcor_coupled_exceeds_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let coupled: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 2.0 * v]).collect();
            let indep: Vec<Vec<f64>> = x.iter().zip(&z).map(|(&a, &b)| vec![a, b]).collect();
            let c = mdcor(&SampleMatrix::from_rows(&coupled).unwrap(), 0, 1).unwrap();
            let i = mdcor(&SampleMatrix::from_rows(&indep).unwrap(), 0, 1).unwrap();
            assert!(c > i, "{c} <= {i}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0..10.0f64, len)
        }

        proptest! {
            #[test]
            fn tensor_symmetric_zero_diagonal(rows in proptest::collection::vec(vector(3), 4..9)) {
                let s = SampleMatrix::from_rows(&rows).unwrap();
                let h = pairwise_distance_tensor(&s);
                for j in 0..3 {
                    let f = h.feature(j);
                    for a in 0..rows.len() {
                        prop_assert_eq!(f[[a, a]], 0.0);
                        for b in 0..rows.len() {
                            prop_assert_eq!(f[[a, b]], f[[b, a]]);
                            prop_assert!(f[[a, b]] >= 0.0);
                        }
                    }
                }
            }

            #[test]
            fn inner_is_bilinear(x in vector(7), y in vector(7), z in vector(7), a in -3.0..3.0f64, b in -3.0..3.0f64) {
                let ux = u_center(&pairwise_distance_matrix(Array1::from(x).view())).unwrap();
                let uy = u_center(&pairwise_distance_matrix(Array1::from(y).view())).unwrap();
                let uz = u_center(&pairwise_distance_matrix(Array1::from(z).view())).unwrap();
                let lhs = ucentered_inner(&ux.scale(a).add(&uy.scale(b)).unwrap(), &uz).unwrap();
                let rhs = a * ucentered_inner(&ux, &uz).unwrap() + b * ucentered_inner(&uy, &uz).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
            }

            #[test]
            fn self_inner_nonnegative(x in vector(6)) {
                let u = u_center(&pairwise_distance_matrix(Array1::from(x).view())).unwrap();
                prop_assert!(ucentered_inner(&u, &u).unwrap() >= 0.0);
            }
        }
    }
}
