//! Z-score / min-max normalization with automatic method choice.

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::data::{ColumnKind, Dataset, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ZScore,
    MinMax,
}

/// Fixed method, or automatic choice by outlier occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeChoice {
    Auto,
    ZScore,
    MinMax,
}

/// Outlier fraction above which the automatic choice prefers z-score
/// (min-max does not handle outliers well).
pub const AUTO_OUTLIER_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation of the fitted column.
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    /// Constant columns map to 0 under either method.
    pub constant: bool,
    /// Fraction of fitted values with |x - mean| > 3 stdev.
    pub outlier_fraction: f64,
}

/// Fitted normalization: the chosen method plus per-numeric-column
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerParams {
    pub method: NormMethod,
    pub columns: Vec<ColumnStats>,
}

/// Fit normalization statistics on `d` (which must have no missing numeric
/// cells). `Auto` selects z-score when any numeric column's outlier fraction
/// exceeds [`AUTO_OUTLIER_THRESHOLD`], min-max otherwise.
pub fn fit_normalizer(
    d: &Dataset,
    choice: NormalizeChoice,
) -> Result<NormalizerParams, PreprocessError> {
    let mut columns = Vec::new();
    for &ci in &d.schema.feature_indices() {
        let col = &d.schema.columns[ci];
        if col.kind != ColumnKind::Numeric {
            continue;
        }
        if d.rows.iter().any(|r| r.values[ci].is_missing()) {
            return Err(PreprocessError::InvalidPolicy(format!(
                "column '{}' still has missing cells; impute before normalizing",
                col.name
            )));
        }
        let vals = d.numeric_column(ci);
        let stats = if vals.is_empty() {
            ColumnStats {
                name: col.name.clone(),
                mean: 0.0,
                stdev: 0.0,
                min: 0.0,
                max: 0.0,
                constant: true,
                outlier_fraction: 0.0,
            }
        } else {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let stdev = var.sqrt();
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let constant = stdev == 0.0;
            let outlier_fraction = if constant {
                0.0
            } else {
                vals.iter().filter(|x| (*x - mean).abs() > 3.0 * stdev).count() as f64 / n
            };
            ColumnStats {
                name: col.name.clone(),
                mean,
                stdev,
                min,
                max,
                constant,
                outlier_fraction,
            }
        };
        columns.push(stats);
    }
    let method = match choice {
        NormalizeChoice::ZScore => NormMethod::ZScore,
        NormalizeChoice::MinMax => NormMethod::MinMax,
        NormalizeChoice::Auto => {
            if columns
                .iter()
                .any(|c| c.outlier_fraction > AUTO_OUTLIER_THRESHOLD)
            {
                NormMethod::ZScore
            } else {
                NormMethod::MinMax
            }
        }
    };
    Ok(NormalizerParams { method, columns })
}

impl NormalizerParams {
    /// Normalize every numeric feature column; categorical and label columns
    /// pass through.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset, PreprocessError> {
        let mut out = d.clone();
        for stats in &self.columns {
            let ci = out
                .schema
                .column_index(&stats.name)
                .ok_or_else(|| PreprocessError::NoSuchColumn(stats.name.clone()))?;
            for r in &mut out.rows {
                if let Value::Num(x) = r.values[ci] {
                    r.values[ci] = Value::Num(self.transform_one(stats, x));
                }
            }
        }
        Ok(out)
    }

    fn transform_one(&self, stats: &ColumnStats, x: f64) -> f64 {
        if stats.constant {
            return 0.0;
        }
        match self.method {
            NormMethod::ZScore => (x - stats.mean) / stats.stdev,
            NormMethod::MinMax => (x - stats.min) / (stats.max - stats.min),
        }
    }
}
