//! Automated feature selection: information-gain relevance filtering
//! followed by Pearson-correlation redundancy pruning.
//!
//! Continuous features are discretized by equal-frequency binning (10 bins)
//! before information-gain scoring. Redundancy pruning drops, for each
//! feature pair with |r| at or above the threshold, the lower-scoring
//! member; pairs are processed greedily by |r| descending.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ColumnKind, Dataset, Value};

/// Bin count for equal-frequency discretization of continuous features.
pub const IG_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("dataset has no label column or no labeled rows")]
    Unlabeled,
    #[error("column '{0}' not found")]
    NoSuchColumn(String),
    #[error("columns have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 paired observations, got {0}")]
    TooFewObservations(usize),
    #[error("TopK({k}) exceeds the number of scored features ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("scores are empty")]
    EmptyScores,
}

/// Per-feature importance scores, descending (ties keep column order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScores {
    pub scores: Vec<(String, f64)>,
}

impl FeatureScores {
    pub fn score_of(&self, name: &str) -> Option<f64> {
        self.scores
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }
}

/// How many top-scored features to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgPolicy {
    TopK(usize),
    /// Smallest score-descending prefix whose score sum reaches
    /// `fraction * total`; all-zero totals keep everything.
    CumulativeImportance(f64),
}

/// Outcome of the two-stage selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub kept: Vec<String>,
    pub dropped_irrelevant: Vec<(String, f64)>,
    /// (dropped, kept partner, r)
    pub dropped_redundant: Vec<(String, String, f64)>,
    pub ig_policy: IgPolicy,
    pub r_threshold: f64,
}

/// Equal-frequency bin assignment: cut points at the B-quantiles of the
/// sorted values, deduplicated so equal values share a bin.
fn equal_frequency_bins(values: &[f64], n_bins: usize) -> Vec<u32> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..n_bins)
        .map(|j| sorted[(n * j / n_bins).min(n - 1)])
        .collect();
    cuts.dedup_by(|a, b| a == b);
    values
        .iter()
        .map(|v| cuts.iter().filter(|c| v >= c).count() as u32)
        .collect()
}

/// Discretized view of a feature column: categorical codes pass through,
/// numeric values are equal-frequency binned, missing cells get a bin of
/// their own.
fn discretize(d: &Dataset, col: usize) -> Vec<u32> {
    match d.schema.columns[col].kind {
        ColumnKind::Categorical => d
            .rows
            .iter()
            .map(|r| match r.values[col] {
                Value::Cat(c) => c + 1,
                _ => 0,
            })
            .collect(),
        ColumnKind::Numeric => {
            let present: Vec<f64> = d.numeric_column(col);
            if present.is_empty() {
                return vec![0; d.n_rows()];
            }
            let bins = equal_frequency_bins(&present, IG_BINS);
            let mut iter = bins.into_iter();
            d.rows
                .iter()
                .map(|r| match r.values[col] {
                    Value::Num(_) => iter.next().expect("bin per value") + 1,
                    _ => 0,
                })
                .collect()
        }
    }
}

fn entropy_of_counts(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of a feature for the class label, in bits:
/// `IG = H(Y) - H(Y|X)` with base-2 logs and `0 log 0 = 0`.
pub fn information_gain(d: &Dataset, feature: &str) -> Result<f64, FeatureError> {
    if !d.is_labeled() {
        return Err(FeatureError::Unlabeled);
    }
    let col = d
        .schema
        .column_index(feature)
        .ok_or_else(|| FeatureError::NoSuchColumn(feature.to_string()))?;
    let bins = discretize(d, col);
    let n_classes = d.schema.n_classes();

    // Joint counts over labeled rows.
    let n_bins = bins.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut joint = vec![vec![0.0f64; n_classes]; n_bins];
    let mut class_totals = vec![0.0f64; n_classes];
    for (r, &b) in d.rows.iter().zip(bins.iter()) {
        if let Some(y) = r.label {
            joint[b as usize][y as usize] += 1.0;
            class_totals[y as usize] += 1.0;
        }
    }
    let total: f64 = class_totals.iter().sum();
    if total == 0.0 {
        return Err(FeatureError::Unlabeled);
    }
    let h_y = entropy_of_counts(&class_totals);
    let h_y_given_x: f64 = joint
        .iter()
        .map(|row| {
            let weight: f64 = row.iter().sum();
            (weight / total) * entropy_of_counts(row)
        })
        .sum();
    Ok((h_y - h_y_given_x).max(0.0))
}

/// Score every feature column by information gain, sorted descending
/// (ties keep column order).
pub fn ig_scores(d: &Dataset) -> Result<FeatureScores, FeatureError> {
    let mut scores = Vec::new();
    for &ci in &d.schema.feature_indices() {
        let name = d.schema.columns[ci].name.clone();
        let s = information_gain(d, &name)?;
        scores.push((name, s));
    }
    scores.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite"));
    Ok(FeatureScores { scores })
}

/// Keep features per the policy over descending scores.
pub fn select_by_ig(scores: &FeatureScores, policy: IgPolicy) -> Result<Vec<String>, FeatureError> {
    let n = scores.scores.len();
    if n == 0 {
        return Err(FeatureError::EmptyScores);
    }
    match policy {
        IgPolicy::TopK(k) => {
            if k > n {
                return Err(FeatureError::KTooLarge { k, n });
            }
            Ok(scores.scores[..k].iter().map(|(f, _)| f.clone()).collect())
        }
        IgPolicy::CumulativeImportance(fraction) => {
            let total: f64 = scores.scores.iter().map(|(_, s)| s).sum();
            if total <= 0.0 {
                return Ok(scores.scores.iter().map(|(f, _)| f.clone()).collect());
            }
            let mut kept = Vec::new();
            let mut acc = 0.0;
            for (f, s) in &scores.scores {
                kept.push(f.clone());
                acc += s;
                if acc >= fraction * total {
                    break;
                }
            }
            Ok(kept)
        }
    }
}

/// Sample Pearson correlation; `constant` flags a zero-variance input, for
/// which r is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    pub constant: bool,
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Pearson, FeatureError> {
    if x.len() != y.len() {
        return Err(FeatureError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(FeatureError::TooFewObservations(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Pearson {
            r: 0.0,
            constant: true,
        });
    }
    Ok(Pearson {
        r: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        constant: false,
    })
}

/// Drop the lower-scoring member of every numeric feature pair whose |r|
/// reaches `r_threshold`; pairs are handled by |r| descending, and score
/// ties drop the later column.
pub fn drop_redundant(
    d: &Dataset,
    scores: &FeatureScores,
    r_threshold: f64,
) -> Result<SelectionReport, FeatureError> {
    let numeric: Vec<(usize, String)> = d
        .schema
        .feature_indices()
        .into_iter()
        .filter(|&ci| d.schema.columns[ci].kind == ColumnKind::Numeric)
        .map(|ci| (ci, d.schema.columns[ci].name.clone()))
        .collect();

    let columns: Vec<Vec<f64>> = numeric
        .iter()
        .map(|(ci, _)| {
            d.rows
                .iter()
                .map(|r| r.values[*ci].as_num().unwrap_or(0.0))
                .collect()
        })
        .collect();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..numeric.len() {
        for j in (i + 1)..numeric.len() {
            if columns[i].len() < 2 {
                continue;
            }
            let p = pearson_r(&columns[i], &columns[j])?;
            if !p.constant && p.r.abs() >= r_threshold {
                pairs.push((p.r, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.abs().partial_cmp(&a.0.abs()).expect("finite"));

    let mut dropped: Vec<bool> = vec![false; numeric.len()];
    let mut dropped_redundant = Vec::new();
    for (r, i, j) in pairs {
        if dropped[i] || dropped[j] {
            continue;
        }
        let si = scores.score_of(&numeric[i].1).unwrap_or(0.0);
        let sj = scores.score_of(&numeric[j].1).unwrap_or(0.0);
        // Lower score loses; ties drop the later column (j).
        let (lose, keep) = if sj < si { (j, i) } else { (i, j) };
        let (lose, keep) = if si == sj { (j, i) } else { (lose, keep) };
        dropped[lose] = true;
        dropped_redundant.push((numeric[lose].1.clone(), numeric[keep].1.clone(), r));
    }

    let dropped_names: Vec<&String> = numeric
        .iter()
        .zip(dropped.iter())
        .filter(|(_, &gone)| gone)
        .map(|((_, name), _)| name)
        .collect();
    let kept = d
        .schema
        .feature_indices()
        .into_iter()
        .map(|ci| d.schema.columns[ci].name.clone())
        .filter(|name| !dropped_names.contains(&name))
        .collect();

    Ok(SelectionReport {
        kept,
        dropped_irrelevant: Vec::new(),
        dropped_redundant,
        ig_policy: IgPolicy::CumulativeImportance(1.0),
        r_threshold,
    })
}

/// The full AutoFE pass: IG filter, then redundancy pruning on the
/// survivors. Returns the reduced dataset and the report.
pub fn auto_select(
    d: &Dataset,
    policy: IgPolicy,
    r_threshold: f64,
) -> Result<(Dataset, SelectionReport), FeatureError> {
    let scores = ig_scores(d)?;
    let relevant = select_by_ig(&scores, policy)?;
    let dropped_irrelevant: Vec<(String, f64)> = scores
        .scores
        .iter()
        .filter(|(f, _)| !relevant.contains(f))
        .cloned()
        .collect();

    let filtered = d
        .select_features(&relevant)
        .map_err(|_| FeatureError::EmptyScores)?;
    let mut report = drop_redundant(&filtered, &scores, r_threshold)?;
    report.dropped_irrelevant = dropped_irrelevant;
    report.ig_policy = policy;
    report.kept = filtered
        .schema
        .feature_indices()
        .into_iter()
        .map(|ci| filtered.schema.columns[ci].name.clone())
        .filter(|name| {
            !report
                .dropped_redundant
                .iter()
                .any(|(gone, _, _)| gone == name)
        })
        .collect();
    let reduced = filtered
        .select_features(&report.kept)
        .map_err(|_| FeatureError::EmptyScores)?;
    Ok((reduced, report))
}
