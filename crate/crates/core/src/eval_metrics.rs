//! Clustering agreement (V-measure, ARI), confusion-matrix metrics and RMSE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CkcError, Result};

fn check_lengths<A, B>(a: &[A], b: &[B], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(CkcError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < min {
        return Err(CkcError::EmptyInput);
    }
    Ok(())
}

/// Contingency table keyed by (true class, predicted cluster), plus marginals.
struct Contingency {
    joint: BTreeMap<(usize, usize), usize>,
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
    n: usize,
}

impl Contingency {
    fn new(truth: &[usize], pred: &[usize]) -> Self {
        let mut joint = BTreeMap::new();
        let mut rows = BTreeMap::new();
        let mut cols = BTreeMap::new();
        for (&t, &p) in truth.iter().zip(pred) {
            *joint.entry((t, p)).or_insert(0) += 1;
            *rows.entry(t).or_insert(0) += 1;
            *cols.entry(p).or_insert(0) += 1;
        }
        Self {
            joint,
            rows,
            cols,
            n: truth.len(),
        }
    }
}

fn entropy<'a>(counts: impl Iterator<Item = &'a usize>, n: usize) -> f64 {
    let n = n as f64;
    -counts
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Harmonic mean of homogeneity and completeness.
///
/// A single true class gives homogeneity 1; a single predicted cluster gives completeness 1.
pub fn v_measure(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred, 1)?;
    let table = Contingency::new(truth, pred);
    let n = table.n as f64;
    let h_true = entropy(table.rows.values(), table.n);
    let h_pred = entropy(table.cols.values(), table.n);
    // H(C|K) and H(K|C) from the joint counts.
    let mut h_true_given_pred = 0.0;
    let mut h_pred_given_true = 0.0;
    for (&(t, p), &c) in &table.joint {
        let c = c as f64;
        h_true_given_pred -= c / n * (c / table.cols[&p] as f64).ln();
        h_pred_given_true -= c / n * (c / table.rows[&t] as f64).ln();
    }
    let homogeneity = if h_true == 0.0 { 1.0 } else { 1.0 - h_true_given_pred / h_true };
    let completeness = if h_pred == 0.0 { 1.0 } else { 1.0 - h_pred_given_true / h_pred };
    if homogeneity + completeness == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * homogeneity * completeness / (homogeneity + completeness))
}

fn pairs(c: usize) -> f64 {
    let c = c as f64;
    c * (c - 1.0) / 2.0
}

/// Pair-counting adjusted Rand index; identical partitions score exactly 1.
pub fn adjusted_rand_index(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred, 2)?;
    let table = Contingency::new(truth, pred);
    let index: f64 = table.joint.values().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = table.rows.values().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = table.cols.values().map(|&c| pairs(c)).sum();
    let expected = sum_rows * sum_cols / pairs(table.n);
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        // Both partitions trivial in the same way (all singletons or one block).
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub accuracy: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    fn ratio(num: u64, den: u64, metric: &'static str) -> Result<f64> {
        if den == 0 {
            return Err(CkcError::ZeroDenominator { metric });
        }
        Ok(num as f64 / den as f64)
    }

    pub fn accuracy(&self) -> Result<f64> {
        Self::ratio(self.tp + self.tn, self.total(), "accuracy")
    }

    pub fn recall(&self) -> Result<f64> {
        Self::ratio(self.tp, self.tp + self.fn_, "recall")
    }

    /// `2TP / (2TP + FP + FN)`.
    pub fn f1(&self) -> Result<f64> {
        Self::ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_, "f1")
    }
}

pub fn confusion_metrics(counts: &ConfusionCounts) -> Result<ConfusionSummary> {
    Ok(ConfusionSummary {
        accuracy: counts.accuracy()?,
        recall: counts.recall()?,
        f1: counts.f1()?,
    })
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat, 1)?;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / y.len() as f64).sqrt())
}
