//! Missing-value imputation.
//!
//! `Drop` removes rows containing missing cells (never columns). Statistical
//! fills (mean / median / mode) are computed over the non-missing training
//! cells. Forward fill copies the most recent prior non-missing value,
//! backward fill the next one; `MovingWindow(n)` fills with the mean of the
//! previous `n` non-missing original values. Leading gaps for forward fill
//! and moving window (and trailing gaps for backward fill) fall back to the
//! column mean, or the column mode for categorical columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::data::{ColumnKind, Dataset, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    Drop,
    Zero,
    Mean,
    Median,
    Mode,
    ForwardFill,
    BackwardFill,
    MovingWindow(usize),
}

impl ImputeMethod {
    fn name(&self) -> String {
        match self {
            ImputeMethod::MovingWindow(n) => format!("moving_window({n})"),
            other => format!("{other:?}"),
        }
    }

    fn compatible(&self, kind: ColumnKind) -> bool {
        match self {
            ImputeMethod::Drop | ImputeMethod::ForwardFill | ImputeMethod::BackwardFill => true,
            ImputeMethod::Mode => kind == ColumnKind::Categorical,
            ImputeMethod::Zero
            | ImputeMethod::Mean
            | ImputeMethod::Median
            | ImputeMethod::MovingWindow(_) => kind == ColumnKind::Numeric,
        }
    }

    /// Standard replacement when the default method does not apply to a
    /// column's kind: mode for categorical, mean for numeric.
    fn kind_default(kind: ColumnKind) -> ImputeMethod {
        match kind {
            ColumnKind::Numeric => ImputeMethod::Mean,
            ColumnKind::Categorical => ImputeMethod::Mode,
        }
    }
}

/// Default method plus per-column overrides. An override incompatible with
/// its column kind is an error; the default method silently falls back to
/// the kind default on incompatible columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputePolicy {
    pub method: ImputeMethod,
    #[serde(default)]
    pub overrides: BTreeMap<String, ImputeMethod>,
}

impl ImputePolicy {
    pub fn new(method: ImputeMethod) -> Self {
        ImputePolicy {
            method,
            overrides: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        if let ImputeMethod::MovingWindow(n) = self.method {
            if n == 0 {
                return Err(PreprocessError::InvalidPolicy(
                    "moving window size must be >= 1".to_string(),
                ));
            }
        }
        for (col, m) in &self.overrides {
            if let ImputeMethod::MovingWindow(0) = m {
                return Err(PreprocessError::InvalidPolicy(format!(
                    "moving window size must be >= 1 (column '{col}')"
                )));
            }
        }
        Ok(())
    }
}

/// Per-column fitted fill state, reusable on new data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedImputer {
    pub columns: Vec<ColumnImputer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnImputer {
    pub name: String,
    pub method: ImputeMethod,
    /// Fill value for statistical methods; gap fallback for sequential ones.
    pub statistic: Option<Value>,
}

/// Impute `d` under `policy`, returning the clean dataset and the fitted
/// state. The label column is never imputed.
pub fn impute(
    d: &Dataset,
    policy: &ImputePolicy,
) -> Result<(Dataset, FittedImputer), PreprocessError> {
    policy.validate()?;
    let feature_cols = d.schema.feature_indices();

    let mut effective: Vec<(usize, ImputeMethod)> = Vec::with_capacity(feature_cols.len());
    for &ci in &feature_cols {
        let col = &d.schema.columns[ci];
        let method = match policy.overrides.get(&col.name) {
            Some(m) => {
                if !m.compatible(col.kind) {
                    return Err(PreprocessError::KindMismatch {
                        column: col.name.clone(),
                        method: m.name(),
                        kind: format!("{:?}", col.kind).to_lowercase(),
                    });
                }
                *m
            }
            None => {
                if policy.method.compatible(col.kind) {
                    policy.method
                } else {
                    ImputeMethod::kind_default(col.kind)
                }
            }
        };
        effective.push((ci, method));
    }

    // Drop phase: rows missing in any Drop-governed column are removed.
    let drop_cols: Vec<usize> = effective
        .iter()
        .filter(|(_, m)| *m == ImputeMethod::Drop)
        .map(|(ci, _)| *ci)
        .collect();
    let mut out = d.clone();
    if !drop_cols.is_empty() {
        out.rows
            .retain(|r| drop_cols.iter().all(|&ci| !r.values[ci].is_missing()));
    }

    let mut fitted_cols = Vec::with_capacity(effective.len());
    for &(ci, method) in &effective {
        let statistic = fit_column_statistic(&out, ci, method)?;
        fill_column(&mut out, ci, method, statistic)?;
        fitted_cols.push(ColumnImputer {
            name: d.schema.columns[ci].name.clone(),
            method,
            statistic,
        });
    }
    Ok((out, FittedImputer { columns: fitted_cols }))
}

impl FittedImputer {
    /// Apply the fitted fills to new data with the same columns.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset, PreprocessError> {
        let mut out = d.clone();
        let drop_cols: Vec<usize> = self
            .columns
            .iter()
            .filter(|c| c.method == ImputeMethod::Drop)
            .map(|c| {
                out.schema
                    .column_index(&c.name)
                    .ok_or_else(|| PreprocessError::NoSuchColumn(c.name.clone()))
            })
            .collect::<Result<_, _>>()?;
        if !drop_cols.is_empty() {
            out.rows
                .retain(|r| drop_cols.iter().all(|&ci| !r.values[ci].is_missing()));
        }
        for col in &self.columns {
            let ci = out
                .schema
                .column_index(&col.name)
                .ok_or_else(|| PreprocessError::NoSuchColumn(col.name.clone()))?;
            fill_column(&mut out, ci, col.method, col.statistic)?;
        }
        Ok(out)
    }
}

fn column_mean(d: &Dataset, ci: usize) -> Option<f64> {
    let vals = d.numeric_column(ci);
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn column_median(d: &Dataset, ci: usize) -> Option<f64> {
    let mut vals = d.numeric_column(ci);
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = vals.len();
    Some(if n % 2 == 1 {
        vals[n / 2]
    } else {
        (vals[n / 2 - 1] + vals[n / 2]) / 2.0
    })
}

/// Most frequent category; ties break to the lowest code.
fn column_mode(d: &Dataset, ci: usize) -> Option<u32> {
    let n_cats = d.schema.columns[ci].categories.len().max(
        d.rows
            .iter()
            .filter_map(|r| r.values[ci].as_cat())
            .max()
            .map_or(0, |c| c as usize + 1),
    );
    let mut counts = vec![0usize; n_cats];
    for r in &d.rows {
        if let Some(c) = r.values[ci].as_cat() {
            counts[c as usize] += 1;
        }
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i as u32)
}

fn fit_column_statistic(
    d: &Dataset,
    ci: usize,
    method: ImputeMethod,
) -> Result<Option<Value>, PreprocessError> {
    let col = &d.schema.columns[ci];
    let missing_present = d.rows.iter().any(|r| r.values[ci].is_missing());
    let all_missing_err = || PreprocessError::AllMissing {
        column: col.name.clone(),
        method: method.name(),
    };
    match method {
        ImputeMethod::Drop => Ok(None),
        ImputeMethod::Zero => Ok(Some(Value::Num(0.0))),
        ImputeMethod::Mean => Ok(Some(Value::Num(
            column_mean(d, ci).ok_or_else(all_missing_err)?,
        ))),
        ImputeMethod::Median => Ok(Some(Value::Num(
            column_median(d, ci).ok_or_else(all_missing_err)?,
        ))),
        ImputeMethod::Mode => Ok(Some(Value::Cat(
            column_mode(d, ci).ok_or_else(all_missing_err)?,
        ))),
        ImputeMethod::ForwardFill | ImputeMethod::BackwardFill | ImputeMethod::MovingWindow(_) => {
            // Gap fallback: column mean (numeric) or mode (categorical).
            let fallback = match col.kind {
                ColumnKind::Numeric => column_mean(d, ci).map(Value::Num),
                ColumnKind::Categorical => column_mode(d, ci).map(Value::Cat),
            };
            match fallback {
                Some(v) => Ok(Some(v)),
                // Only an error if there is actually something to fill.
                None if missing_present => Err(all_missing_err()),
                None => Ok(None),
            }
        }
    }
}

fn fill_column(
    out: &mut Dataset,
    ci: usize,
    method: ImputeMethod,
    statistic: Option<Value>,
) -> Result<(), PreprocessError> {
    match method {
        ImputeMethod::Drop => {}
        ImputeMethod::Zero | ImputeMethod::Mean | ImputeMethod::Median | ImputeMethod::Mode => {
            let fill = statistic.expect("statistical methods always carry a fill value");
            for r in &mut out.rows {
                if r.values[ci].is_missing() {
                    r.values[ci] = fill;
                }
            }
        }
        ImputeMethod::ForwardFill => {
            let mut last: Option<Value> = None;
            for r in &mut out.rows {
                if r.values[ci].is_missing() {
                    r.values[ci] = last.or(statistic).expect("fallback fitted");
                } else {
                    last = Some(r.values[ci]);
                }
            }
        }
        ImputeMethod::BackwardFill => {
            let mut next: Option<Value> = None;
            for r in out.rows.iter_mut().rev() {
                if r.values[ci].is_missing() {
                    r.values[ci] = next.or(statistic).expect("fallback fitted");
                } else {
                    next = Some(r.values[ci]);
                }
            }
        }
        ImputeMethod::MovingWindow(n) => {
            // Window over original non-missing values only.
            let mut recent: Vec<f64> = Vec::new();
            for r in &mut out.rows {
                match r.values[ci] {
                    Value::Num(x) => recent.push(x),
                    Value::Missing => {
                        let window: Vec<f64> =
                            recent.iter().rev().take(n).copied().collect();
                        r.values[ci] = if window.is_empty() {
                            statistic.expect("fallback fitted")
                        } else {
                            Value::Num(window.iter().sum::<f64>() / window.len() as f64)
                        };
                    }
                    Value::Cat(_) => {}
                }
            }
        }
    }
    Ok(())
}
