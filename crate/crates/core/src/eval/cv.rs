//! K-fold (optionally stratified) and rolling cross-validation.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::Dataset;
use crate::seeding::rng_from_seed;
use rand::seq::SliceRandom;

/// Metrics from one train/validate round, as produced by the fold
/// evaluation closure.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub learn_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: Vec<FoldMetrics>,
    pub mean: FoldMetrics,
    pub stdev: FoldMetrics,
    /// Set when stratification was requested but a class had fewer than k
    /// samples, forcing plain folding.
    pub stratified_fallback: bool,
}

/// Shuffled fold assignment: `n` row indices into `k` folds whose sizes
/// differ by at most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, row) in order.into_iter().enumerate() {
        folds[i % k].push(row);
    }
    folds
}

/// Stratified assignment: shuffles within each class then deals class
/// members round-robin, keeping per-fold class proportions within one
/// sample of the global ones.
pub fn stratified_fold_indices(labels: &[Option<u32>], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let n_classes = labels
        .iter()
        .flatten()
        .copied()
        .max()
        .map_or(0, |c| c as usize + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes + 1];
    for (i, l) in labels.iter().enumerate() {
        match l {
            Some(c) => per_class[*c as usize].push(i),
            None => per_class[n_classes].push(i),
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next_fold = 0usize;
    for members in &mut per_class {
        members.shuffle(&mut rng);
        for &row in members.iter() {
            folds[next_fold].push(row);
            next_fold = (next_fold + 1) % k;
        }
    }
    folds
}

fn subset(d: &Dataset, rows: &[usize]) -> Dataset {
    Dataset {
        schema: d.schema.clone(),
        rows: rows.iter().map(|&i| d.rows[i].clone()).collect(),
    }
}

/// Run `evaluate(train, valid)` for each of `k` folds and aggregate
/// mean ± stdev per metric. Fold assignment is seeded and deterministic.
pub fn kfold_cv(
    d: &Dataset,
    k: usize,
    seed: u64,
    stratified: bool,
    mut evaluate: impl FnMut(&Dataset, &Dataset) -> Result<FoldMetrics, EvalError>,
) -> Result<CvSummary, EvalError> {
    let n = d.n_rows();
    if k < 2 || k > n {
        return Err(EvalError::BadFoldCount { k, n });
    }
    let mut fallback = false;
    let folds = if stratified {
        let counts = d.class_counts();
        if counts.iter().any(|&c| c > 0 && c < k) {
            fallback = true;
            fold_indices(n, k, seed)
        } else {
            let labels: Vec<Option<u32>> = d.rows.iter().map(|r| r.label).collect();
            stratified_fold_indices(&labels, k, seed)
        }
    } else {
        fold_indices(n, k, seed)
    };

    let mut results = Vec::with_capacity(k);
    for fold in &folds {
        let valid = subset(d, fold);
        let train_rows: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
        let train = subset(d, &train_rows);
        results.push(evaluate(&train, &valid)?);
    }

    let agg = |f: fn(&FoldMetrics) -> f64| -> (f64, f64) {
        let vals: Vec<f64> = results.iter().map(f).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        (mean, var.sqrt())
    };
    let (acc, acc_sd) = agg(|m| m.accuracy);
    let (prec, prec_sd) = agg(|m| m.precision);
    let (rec, rec_sd) = agg(|m| m.recall);
    let (f1, f1_sd) = agg(|m| m.f1);
    let (ls, ls_sd) = agg(|m| m.learn_seconds);
    let (ps, ps_sd) = agg(|m| m.predict_seconds);
    Ok(CvSummary {
        folds: results,
        mean: FoldMetrics {
            accuracy: acc,
            precision: prec,
            recall: rec,
            f1,
            learn_seconds: ls,
            predict_seconds: ps,
        },
        stdev: FoldMetrics {
            accuracy: acc_sd,
            precision: prec_sd,
            recall: rec_sd,
            f1: f1_sd,
            learn_seconds: ls_sd,
            predict_seconds: ps_sd,
        },
        stratified_fallback: fallback,
    })
}

/// Forward-chaining evaluation for time-ordered data: the rows are cut into
/// `n_splits + 1` contiguous blocks; split `i` trains on blocks `0..=i` and
/// validates on block `i + 1`, so no validation row ever precedes a
/// training row.
pub fn rolling_cv(
    d: &Dataset,
    n_splits: usize,
    mut evaluate: impl FnMut(&Dataset, &Dataset) -> Result<FoldMetrics, EvalError>,
) -> Result<Vec<FoldMetrics>, EvalError> {
    let n = d.n_rows();
    if n_splits == 0 || n_splits + 1 > n {
        return Err(EvalError::BadSplitCount(n_splits, n));
    }
    let boundaries = rolling_boundaries(n, n_splits);
    let mut out = Vec::with_capacity(n_splits);
    for w in boundaries.windows(2) {
        let (train_end, valid_end) = (w[0], w[1]);
        let train_rows: Vec<usize> = (0..train_end).collect();
        let valid_rows: Vec<usize> = (train_end..valid_end).collect();
        out.push(evaluate(&subset(d, &train_rows), &subset(d, &valid_rows))?);
    }
    Ok(out)
}

/// Block boundaries for rolling CV: `n_splits + 1` near-equal blocks; the
/// returned vector holds the end index of block 0, block 1, ... block n.
pub(crate) fn rolling_boundaries(n: usize, n_splits: usize) -> Vec<usize> {
    let blocks = n_splits + 1;
    (1..=blocks).map(|b| n * b / blocks).collect()
}
