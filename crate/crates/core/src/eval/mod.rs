//! Metrics and evaluation harnesses: classification / regression metrics,
//! hold-out style k-fold and rolling cross-validation, and prequential
//! test-then-train evaluation.

mod cv;
mod prequential;

pub use cv::{fold_indices, kfold_cv, rolling_cv, stratified_fold_indices, CvSummary, FoldMetrics};
pub use prequential::{
    prequential_eval, zero_one_loss, AttachedDetector, DetectorFeed, DriftEvent, DriftPolicy,
    PrequentialRecord,
    PrequentialTrace,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least one observation")]
    Empty,
    #[error("k = {k} folds invalid for {n} rows")]
    BadFoldCount { k: usize, n: usize },
    #[error("{0} splits need more than {1} rows")]
    BadSplitCount(usize, usize),
    #[error("dataset has no label column or no labeled rows")]
    Unlabeled,
    #[error("fold evaluation failed: {0}")]
    FoldFailed(String),
}

/// One-vs-rest confusion counts per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// matrix[actual][predicted]
    pub matrix: Vec<Vec<usize>>,
    /// Class treated as "positive" in binary reporting.
    pub positive_class: u32,
}

impl ConfusionCounts {
    pub fn new(n_classes: usize) -> Self {
        ConfusionCounts {
            matrix: vec![vec![0; n_classes.max(1)]; n_classes.max(1)],
            positive_class: u32::from(n_classes >= 2),
        }
    }

    pub fn with_positive_class(mut self, positive: u32) -> Self {
        self.positive_class = positive;
        self
    }

    pub fn record(&mut self, actual: u32, predicted: u32) {
        let n = self.matrix.len();
        let (a, p) = (actual as usize, predicted as usize);
        if a < n && p < n {
            self.matrix[a][p] += 1;
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    pub fn n_classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn tp(&self, class: usize) -> usize {
        self.matrix[class][class]
    }

    pub fn fp(&self, class: usize) -> usize {
        (0..self.matrix.len())
            .filter(|&a| a != class)
            .map(|a| self.matrix[a][class])
            .sum()
    }

    pub fn fn_(&self, class: usize) -> usize {
        (0..self.matrix.len())
            .filter(|&p| p != class)
            .map(|p| self.matrix[class][p])
            .sum()
    }

    pub fn tn(&self, class: usize) -> usize {
        self.n() - self.tp(class) - self.fp(class) - self.fn_(class)
    }
}

/// Precision / recall / F1 for one class; flags mark zero-denominator
/// metrics that were defined as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub precision_flagged: bool,
    pub recall_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Binary-style reporting for the configured positive class.
    pub positive: ClassMetrics,
}

/// Accuracy, precision, recall and F1 (per class and macro averaged) from
/// confusion counts. Zero-denominator precision/recall are defined as 0 and
/// flagged.
pub fn classification_metrics(c: &ConfusionCounts) -> Result<ClassificationMetrics, EvalError> {
    let n = c.n();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let correct: usize = (0..c.n_classes()).map(|k| c.tp(k)).sum();
    let accuracy = correct as f64 / n as f64;
    let per_class: Vec<ClassMetrics> = (0..c.n_classes())
        .map(|k| {
            let (tp, fp, fn_) = (c.tp(k) as f64, c.fp(k) as f64, c.fn_(k) as f64);
            let precision_flagged = tp + fp == 0.0;
            let recall_flagged = tp + fn_ == 0.0;
            let precision = if precision_flagged { 0.0 } else { tp / (tp + fp) };
            let recall = if recall_flagged { 0.0 } else { tp / (tp + fn_) };
            let f1 = if 2.0 * tp + fp + fn_ == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: c.tp(k) + c.fn_(k),
                precision_flagged,
                recall_flagged,
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let positive = per_class
        .get(c.positive_class as usize)
        .copied()
        .unwrap_or(per_class[0]);
    Ok(ClassificationMetrics {
        accuracy,
        macro_precision: per_class.iter().map(|m| m.precision).sum::<f64>() / k,
        macro_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / k,
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / k,
        per_class,
        positive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// MSE, RMSE (= sqrt of MSE exactly) and MAE.
pub fn regression_metrics(y: &[f64], y_hat: &[f64]) -> Result<RegressionMetrics, EvalError> {
    if y.len() != y_hat.len() {
        return Err(EvalError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = y.len() as f64;
    let mse = y
        .iter()
        .zip(y_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    let mae = y
        .iter()
        .zip(y_hat.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n;
    Ok(RegressionMetrics {
        mse,
        rmse: mse.sqrt(),
        mae,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_matches_eq_form_on_fixture() {
        // TP=2, FP=1, FN=1 -> F1 = 4/6.
        let mut c = ConfusionCounts::new(2);
        c.record(1, 1);
        c.record(1, 1);
        c.record(0, 1);
        c.record(1, 0);
        let m = classification_metrics(&c).unwrap();
        assert!((m.positive.f1 - 4.0 / 6.0).abs() < 1e-12);
        assert!((m.positive.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.positive.recall - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let mut c = ConfusionCounts::new(2);
        for _ in 0..5 {
            c.record(0, 0);
            c.record(1, 1);
        }
        let m = classification_metrics(&c).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.positive.precision, 1.0);
        assert_eq!(m.positive.recall, 1.0);
        assert_eq!(m.positive.f1, 1.0);
    }

    #[test]
    fn no_positives_flags_precision_and_keeps_accuracy() {
        let mut c = ConfusionCounts::new(2);
        c.record(0, 0);
        c.record(0, 0);
        let m = classification_metrics(&c).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(m.positive.precision_flagged);
        assert!(m.positive.recall_flagged);
        assert_eq!(m.positive.precision, 0.0);
    }

    #[test]
    fn f1_is_harmonic_mean_of_precision_and_recall() {
        let mut c = ConfusionCounts::new(2);
        for (a, p, times) in [(1, 1, 6), (0, 1, 2), (1, 0, 3), (0, 0, 9)] {
            for _ in 0..times {
                c.record(a, p);
            }
        }
        let m = classification_metrics(&c).unwrap();
        let harmonic =
            2.0 * m.positive.precision * m.positive.recall / (m.positive.precision + m.positive.recall);
        assert!((m.positive.f1 - harmonic).abs() < 1e-12);
    }

    #[test]
    fn recall_identity_and_macro_f1_bounds() {
        let mut c = ConfusionCounts::new(3);
        for (a, p) in [(0, 0), (0, 1), (1, 1), (1, 1), (2, 0), (2, 2), (2, 2)] {
            c.record(a, p);
        }
        let m = classification_metrics(&c).unwrap();
        for k in 0..3 {
            let expected = c.tp(k) as f64 / (c.tp(k) + c.fn_(k)) as f64;
            assert!((m.per_class[k].recall - expected).abs() < 1e-12);
        }
        let min_f1 = m.per_class.iter().map(|x| x.f1).fold(f64::INFINITY, f64::min);
        let max_f1 = m.per_class.iter().map(|x| x.f1).fold(0.0, f64::max);
        assert!(m.macro_f1 >= min_f1 - 1e-12 && m.macro_f1 <= max_f1 + 1e-12);
    }

    #[test]
    fn per_class_counts_partition_n() {
        let mut c = ConfusionCounts::new(3);
        for (a, p) in [(0, 1), (1, 2), (2, 0), (1, 1), (0, 0)] {
            c.record(a, p);
        }
        for k in 0..3 {
            assert_eq!(c.tp(k) + c.fp(k) + c.fn_(k) + c.tn(k), c.n());
        }
    }

    #[test]
    fn regression_zero_error_and_constant_offset() {
        let y = [1.0, 2.0, 3.0];
        let m = regression_metrics(&y, &y).unwrap();
        assert_eq!((m.mse, m.rmse, m.mae), (0.0, 0.0, 0.0));

        let shifted: Vec<f64> = y.iter().map(|v| v + 2.0).collect();
        let m = regression_metrics(&y, &shifted).unwrap();
        assert!((m.mae - 2.0).abs() < 1e-12);
        assert!((m.mse - 4.0).abs() < 1e-12);
        assert!((m.rmse - 2.0).abs() < 1e-12);
    }

    #[test]
    fn regression_matches_direct_sums_and_identities() {
        let y = [0.5, -1.2, 3.3, 2.0, 0.0, 4.4, -2.2, 1.1, 0.9, -0.4];
        let y_hat = [0.4, -1.0, 3.0, 2.5, 0.2, 4.0, -2.0, 1.4, 1.0, -0.1];
        let m = regression_metrics(&y, &y_hat).unwrap();
        let mut se = 0.0;
        let mut ae = 0.0;
        for i in 0..y.len() {
            se += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
            ae += (y[i] - y_hat[i]).abs();
        }
        assert!((m.mse - se / 10.0).abs() < 1e-12);
        assert!((m.mae - ae / 10.0).abs() < 1e-12);
        assert!((m.rmse * m.rmse - m.mse).abs() < 1e-12);
        assert!(m.mae <= m.rmse + 1e-12);
    }

    #[test]
    fn mismatched_lengths_error() {
        assert!(matches!(
            regression_metrics(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
    }
}
