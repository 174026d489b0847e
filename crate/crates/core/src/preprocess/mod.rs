//! Automated data pre-processing: encoding, missing-value reporting and
//! imputation, normalization with automatic method choice, SMOTE balancing.
//!
//! Fitted transformers are immutable, shareable, and serializable to a JSON
//! document for reuse across runs.

mod balance;
mod encode;
mod impute;
mod normalize;

pub use balance::{smote_balance, BalancePolicy, BalanceReport};
pub use encode::EncodingMap;
pub use impute::{impute, FittedImputer, ImputeMethod, ImputePolicy};
pub use normalize::{fit_normalizer, NormMethod, NormalizeChoice, NormalizerParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("column '{column}': {method} imputation needs at least one non-missing value")]
    AllMissing { column: String, method: String },
    #[error("column '{column}': method {method} does not apply to a {kind} column")]
    KindMismatch {
        column: String,
        method: String,
        kind: String,
    },
    #[error("column '{column}': unseen category '{category}' at transform time")]
    UnseenCategory { column: String, category: String },
    #[error("column '{0}' not found")]
    NoSuchColumn(String),
    #[error("dataset has no label column or no labeled rows")]
    Unlabeled,
    #[error("minority class '{class}' has {count} samples; SMOTE needs at least 2")]
    MinorityTooSmall { class: String, count: usize },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("serialization: {0}")]
    Serde(String),
}

/// Per-column missing-value counts and percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingReport {
    pub columns: Vec<MissingColumn>,
    pub total_missing: usize,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingColumn {
    pub name: String,
    pub count: usize,
    pub percentage: f64,
}

/// Count missing cells per column (the label column included, since missing
/// labels also matter for triage).
pub fn missing_report(d: &Dataset) -> MissingReport {
    let n = d.n_rows();
    let columns = d
        .schema
        .columns
        .iter()
        .enumerate()
        .map(|(ci, col)| {
            let count = d.rows.iter().filter(|r| r.values[ci].is_missing()).count();
            MissingColumn {
                name: col.name.clone(),
                count,
                percentage: if n == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / n as f64
                },
            }
        })
        .collect::<Vec<_>>();
    MissingReport {
        total_missing: columns.iter().map(|c| c.count).sum(),
        columns,
        n_rows: n,
    }
}

/// The full fitted pre-processing state: encoding tables, imputation
/// fallback statistics, and normalization parameters. Serializable for
/// reuse across runs; apply order is encode -> impute -> normalize.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedPreprocessor {
    pub encoding: EncodingMap,
    pub imputer: FittedImputer,
    pub normalizer: NormalizerParams,
}

impl FittedPreprocessor {
    pub fn to_json(&self) -> Result<String, PreprocessError> {
        serde_json::to_string_pretty(self).map_err(|e| PreprocessError::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, PreprocessError> {
        serde_json::from_str(text).map_err(|e| PreprocessError::Serde(e.to_string()))
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset, PreprocessError> {
        let encoded = self.encoding.apply(d)?;
        let imputed = self.imputer.apply(&encoded)?;
        self.normalizer.apply(&imputed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Dataset, Instance, Schema, Value};

    fn numeric_dataset(cells: &[&[Option<f64>]]) -> Dataset {
        let n_cols = cells[0].len();
        let schema = Schema::new(
            (0..n_cols)
                .map(|i| Column::numeric(format!("c{i}")))
                .collect(),
        );
        let mut d = Dataset::new(schema);
        for row in cells {
            let values = row
                .iter()
                .map(|v| v.map_or(Value::Missing, Value::Num))
                .collect();
            d.push(Instance::new(values)).unwrap();
        }
        d
    }

    #[test]
    fn no_missing_cells_reports_zeros() {
        let d = numeric_dataset(&[&[Some(1.0), Some(2.0)], &[Some(3.0), Some(4.0)]]);
        let r = missing_report(&d);
        assert_eq!(r.total_missing, 0);
        assert!(r.columns.iter().all(|c| c.count == 0 && c.percentage == 0.0));
    }

    #[test]
    fn one_missing_of_four_is_25_percent() {
        let d = numeric_dataset(&[
            &[Some(1.0)],
            &[None],
            &[Some(3.0)],
            &[Some(4.0)],
        ]);
        let r = missing_report(&d);
        assert_eq!(r.columns[0].count, 1);
        assert!((r.columns[0].percentage - 25.0).abs() < 1e-12);
    }

    #[test]
    fn all_missing_column_is_100_percent() {
        let d = numeric_dataset(&[&[None], &[None], &[None]]);
        let r = missing_report(&d);
        assert_eq!(r.columns[0].count, 3);
        assert!((r.columns[0].percentage - 100.0).abs() < 1e-12);
    }
}
