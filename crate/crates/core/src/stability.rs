//! Per-subgroup least squares, cross-subgroup coefficient stability and the
//! held-out-subgroup error of models restricted to the most stable features.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::distance_stats::SampleMatrix;
use crate::error::{CkcError, Result};
use crate::eval_metrics::rmse;

/// Regulariser used when a design matrix is rank deficient.
pub const RIDGE_FALLBACK: f64 = 1e-6;

/// Least squares with intercept; returns `(β₀, β₁, …, β_p)`.
///
/// QR is used when the design has full column rank, otherwise ridge with
/// [`RIDGE_FALLBACK`].
pub fn least_squares(x: &Array2<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(CkcError::LengthMismatch { left: n, right: y.len() });
    }
    if n == 0 {
        return Err(CkcError::EmptyInput);
    }
    let design = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { x[[r, c - 1]] });
    let target = DVector::from_column_slice(y);
    if n > p {
        let qr = design.clone().qr();
        let r = qr.r();
        let scale = r.diagonal().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let full_rank = r.diagonal().iter().all(|v| v.abs() > 1e-10 * scale.max(1.0));
        if full_rank {
            let qty = qr.q().transpose() * &target;
            if let Some(beta) = r.solve_upper_triangular(&qty) {
                return Ok(beta.iter().copied().collect());
            }
        }
    }
    log::warn!("rank-deficient design ({n} x {}), using ridge fallback", p + 1);
    let gram = design.transpose() * &design + DMatrix::identity(p + 1, p + 1) * RIDGE_FALLBACK;
    let rhs = design.transpose() * &target;
    let beta = gram
        .cholesky()
        .ok_or_else(|| CkcError::InvalidArgument("ridge system is not positive definite".into()))?
        .solve(&rhs);
    Ok(beta.iter().copied().collect())
}

fn predict(beta: &[f64], x: &Array2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|row| beta[0] + row.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// One row of intercept and slopes per fitted subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupCoefficients {
    /// Subgroup labels in row order.
    pub groups: Vec<usize>,
    /// Subgroups dropped for having no more than `m + 1` samples.
    pub skipped: Vec<usize>,
    /// `K × (m + 1)`: intercept first.
    pub beta: Vec<Vec<f64>>,
}

impl SubgroupCoefficients {
    pub fn n_features(&self) -> usize {
        self.beta.first().map_or(0, |b| b.len() - 1)
    }
}

fn group_rows(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups
}

fn check_inputs(samples: &SampleMatrix, y: &[f64], labels: &[usize]) -> Result<()> {
    let n = samples.n_samples();
    if y.len() != n {
        return Err(CkcError::LengthMismatch { left: n, right: y.len() });
    }
    if labels.len() != n {
        return Err(CkcError::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    Ok(())
}

/// Ordinary least squares with intercept inside every subgroup of `labels`.
pub fn subgroup_regression(samples: &SampleMatrix, y: &[f64], labels: &[usize]) -> Result<SubgroupCoefficients> {
    check_inputs(samples, y, labels)?;
    let m = samples.n_features();
    let mut out = SubgroupCoefficients {
        groups: Vec::new(),
        skipped: Vec::new(),
        beta: Vec::new(),
    };
    for (label, rows) in group_rows(labels) {
        if rows.len() <= m + 1 {
            log::warn!("subgroup {label} has {} samples, need more than {}; skipped", rows.len(), m + 1);
            out.skipped.push(label);
            continue;
        }
        let x = samples.data().select(ndarray::Axis(0), &rows);
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        out.beta.push(least_squares(&x, &ys)?);
        out.groups.push(label);
    }
    if out.beta.is_empty() {
        return Err(CkcError::AllSubgroupsTooSmall { features: m });
    }
    Ok(out)
}

/// `F(X_p) = (β_p^{g_1}, …, β_p^{g_K})` for every feature; intercepts excluded.
pub fn feature_vectors(coeffs: &SubgroupCoefficients) -> Result<Vec<Vec<f64>>> {
    if coeffs.beta.len() < 2 {
        return Err(CkcError::TooFewSubgroups {
            required: 2,
            actual: coeffs.beta.len(),
        });
    }
    let m = coeffs.n_features();
    Ok((1..=m).map(|p| coeffs.beta.iter().map(|row| row[p]).collect()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRanking {
    /// Sample variance (ddof 1) of each feature vector, in feature order.
    pub variances: Vec<f64>,
    /// Feature indices by ascending variance, ties by index.
    pub order: Vec<usize>,
}

impl StabilityRanking {
    pub fn top(&self, k: usize) -> Vec<usize> {
        self.order.iter().take(k).copied().collect()
    }
}

fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn stability_ranking(vectors: &[Vec<f64>]) -> StabilityRanking {
    let variances: Vec<f64> = vectors.iter().map(|v| sample_variance(v)).collect();
    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&a, &b| variances[a].total_cmp(&variances[b]).then(a.cmp(&b)));
    StabilityRanking { variances, order }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutFold {
    pub held_out: usize,
    /// Features used by the model, most stable first.
    pub selected: Vec<usize>,
    pub predictions: Vec<f64>,
    pub truth: Vec<f64>,
    pub rmse_train: f64,
    pub sta_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaErrorReport {
    /// Mean over folds.
    pub rmse_train: f64,
    /// Mean held-out RMSE over folds.
    pub sta_error: f64,
    pub folds: Vec<HoldoutFold>,
}

/// Round-robin subgroup holdout. In each fold the stability ranking is computed
/// on the training subgroups only and a pooled least-squares model on the
/// `top_k` most stable features is scored on the held-out subgroup.
pub fn sta_error_eval(samples: &SampleMatrix, y: &[f64], labels: &[usize], top_k: usize) -> Result<StaErrorReport> {
    check_inputs(samples, y, labels)?;
    let m = samples.n_features();
    if top_k == 0 || top_k > m {
        return Err(CkcError::InvalidArgument(format!("top_k must lie in 1..={m}, got {top_k}")));
    }
    let groups = group_rows(labels);
    if groups.len() < 3 {
        return Err(CkcError::TooFewSubgroups {
            required: 3,
            actual: groups.len(),
        });
    }
    let mut folds = Vec::with_capacity(groups.len());
    for (&held_out, test_rows) in &groups {
        let train_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != held_out).collect();
        let train = samples.select_rows(&train_rows)?;
        let y_train: Vec<f64> = train_rows.iter().map(|&i| y[i]).collect();
        let l_train: Vec<usize> = train_rows.iter().map(|&i| labels[i]).collect();

        let selected = if top_k == m {
            (0..m).collect()
        } else {
            let coeffs = subgroup_regression(&train, &y_train, &l_train)?;
            stability_ranking(&feature_vectors(&coeffs)?).top(top_k)
        };
        let x_train = train.data().select(ndarray::Axis(1), &selected);
        let beta = least_squares(&x_train, &y_train)?;
        let rmse_train = rmse(&y_train, &predict(&beta, &x_train))?;

        let x_test = samples
            .data()
            .select(ndarray::Axis(0), test_rows)
            .select(ndarray::Axis(1), &selected);
        let truth: Vec<f64> = test_rows.iter().map(|&i| y[i]).collect();
        let predictions = predict(&beta, &x_test);
        let sta_error = rmse(&truth, &predictions)?;
        folds.push(HoldoutFold {
            held_out,
            selected,
            predictions,
            truth,
            rmse_train,
            sta_error,
        });
    }
    let k = folds.len() as f64;
    Ok(StaErrorReport {
        rmse_train: folds.iter().map(|f| f.rmse_train).sum::<f64>() / k,
        sta_error: folds.iter().map(|f| f.sta_error).sum::<f64>() / k,
        folds,
    })
}
