//! The two-stage CASH driver: stage 1 evaluates every candidate algorithm
//! at its default configuration via k-fold cross-validation; stage 2 tunes
//! the top two (by F1) with the configured optimizer, injecting the default
//! config as trial 0 so tuning can never end up worse than the baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::tpe::{tpe_search, TpeParams};
use super::{grid_search, random_search, CashError, Config, SearchSpace, TrialHistory};
use crate::data::Dataset;
use crate::eval::{classification_metrics, kfold_cv, ConfusionCounts, CvSummary, FoldMetrics};
use crate::offline::Classifier;
use crate::online::OnlineClassifier;
use crate::seeding::derive_seed_indexed;

/// Scoring metric for model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    F1,
}

impl Metric {
    pub fn of(self, m: &FoldMetrics) -> f64 {
        match self {
            Metric::Accuracy => m.accuracy,
            Metric::F1 => m.f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Grid { resolution: usize },
    Random,
    Tpe,
}

/// Per-training-fold preprocessing hook: returns the transformed training
/// split and a transform to apply to the validation split (fitted on the
/// training split only, so nothing leaks).
pub type ValidTransform = Box<dyn Fn(&Dataset) -> Result<Dataset, String>>;

pub trait FoldPrep {
    fn fit_transform(&self, train: &Dataset) -> Result<(Dataset, ValidTransform), String>;
}

/// No-op fold preprocessing.
pub struct NoPrep;

impl FoldPrep for NoPrep {
    fn fit_transform(&self, train: &Dataset) -> Result<(Dataset, ValidTransform), String> {
        Ok((train.clone(), Box::new(|d: &Dataset| Ok(d.clone()))))
    }
}

/// One algorithm in the CASH menu: its search space, default config, and a
/// factory building a classifier from a config.
pub struct CashCandidate {
    pub id: String,
    pub space: SearchSpace,
    pub default_config: Config,
    #[allow(clippy::type_complexity)]
    pub build: Box<dyn Fn(&Config) -> Result<Box<dyn Classifier>, String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage1Row {
    pub algorithm: String,
    pub cv: CvSummary,
    pub f1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CashResult {
    pub best_algorithm: String,
    pub best_config: Config,
    pub best_loss: f64,
    pub best_cv: CvSummary,
    /// Default-config table, one row per candidate, stage-1 order.
    pub stage1: Vec<Stage1Row>,
    /// Tuning audit per top-2 candidate.
    pub stage2: Vec<(String, TrialHistory)>,
}

/// Cross-validated evaluation of one (candidate, config) pair; loss is
/// `1 - F1` (classification).
fn evaluate_config(
    candidate: &CashCandidate,
    config: &Config,
    d: &Dataset,
    cv_k: usize,
    seed: u64,
    prep: &dyn FoldPrep,
) -> Result<CvSummary, String> {
    kfold_cv(d, cv_k, seed, true, |train, valid| {
        let (train, valid_transform) = prep
            .fit_transform(train)
            .map_err(crate::eval::EvalError::FoldFailed)?;
        let valid = valid_transform(valid).map_err(crate::eval::EvalError::FoldFailed)?;
        let mut model = (candidate.build)(config).map_err(crate::eval::EvalError::FoldFailed)?;
        let t0 = Instant::now();
        model
            .fit(&train)
            .map_err(|e| crate::eval::EvalError::FoldFailed(e.to_string()))?;
        let learn_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let mut confusion = ConfusionCounts::new(valid.schema.n_classes());
        for row in &valid.rows {
            if let Some(actual) = row.label {
                confusion.record(actual, model.predict(row));
            }
        }
        let predict_seconds = t1.elapsed().as_secs_f64();
        let m = classification_metrics(&confusion)
            .map_err(|e| crate::eval::EvalError::FoldFailed(e.to_string()))?;
        Ok(FoldMetrics {
            accuracy: m.accuracy,
            precision: m.positive.precision,
            recall: m.positive.recall,
            f1: m.positive.f1,
            learn_seconds,
            predict_seconds,
        })
    })
    .map_err(|e| e.to_string())
}

/// Two-stage CASH: returns the overall best (algorithm, config) with its CV
/// metrics and the complete audit trail.
#[allow(clippy::too_many_arguments)]
pub fn cash_optimize(
    candidates: &[CashCandidate],
    d: &Dataset,
    cv_k: usize,
    metric: Metric,
    stage2_budget: usize,
    optimizer: OptimizerKind,
    seed: u64,
    prep: &dyn FoldPrep,
) -> Result<CashResult, CashError> {
    if candidates.is_empty() {
        return Err(CashError::NoCandidates);
    }
    let fold_seed = derive_seed_indexed(seed, "cash-folds", 0);

    // Stage 1: defaults via CV.
    let mut stage1 = Vec::with_capacity(candidates.len());
    for c in candidates {
        let cv = evaluate_config(c, &c.default_config, d, cv_k, fold_seed, prep)
            .map_err(CashError::Evaluation)?;
        stage1.push(Stage1Row {
            algorithm: c.id.clone(),
            f1: cv.mean.f1,
            cv,
        });
    }

    // Rank candidates for stage 2 by F1 (ties keep menu order).
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        stage1[b]
            .f1
            .partial_cmp(&stage1[a].f1)
            .expect("finite f1")
            .then(a.cmp(&b))
    });
    let top: Vec<usize> = order.into_iter().take(2).collect();

    let mut best: Option<(String, Config, f64, CvSummary)> = None;
    let mut consider =
        |algorithm: &str, config: &Config, loss: f64, cv: CvSummary, best: &mut Option<_>| {
            if best
                .as_ref()
                .is_none_or(|(_, _, l, _): &(String, Config, f64, CvSummary)| loss < *l)
            {
                *best = Some((algorithm.to_string(), config.clone(), loss, cv));
            }
        };

    // Stage-1 defaults participate in the final comparison.
    for (c, row) in candidates.iter().zip(stage1.iter()) {
        consider(
            &c.id,
            &c.default_config,
            1.0 - metric.of(&row.cv.mean),
            row.cv.clone(),
            &mut best,
        );
    }

    // Stage 2: tune the top two.
    let mut stage2 = Vec::new();
    for (rank, &ci) in top.iter().enumerate() {
        let candidate = &candidates[ci];
        if stage2_budget == 0 || candidate.space.is_empty() {
            continue;
        }
        let mut cv_cache: Vec<(Config, CvSummary)> = Vec::new();
        let objective = |config: &Config| -> Result<f64, String> {
            let cv = evaluate_config(candidate, config, d, cv_k, fold_seed, prep)?;
            let loss = 1.0 - metric.of(&cv.mean);
            cv_cache.push((config.clone(), cv));
            Ok(loss)
        };
        let opt_seed = derive_seed_indexed(seed, "cash-stage2", rank as u64);
        let initial = vec![candidate.default_config.clone()];
        let outcome = match optimizer {
            OptimizerKind::Tpe => tpe_search(
                &candidate.space,
                objective,
                stage2_budget,
                opt_seed,
                &TpeParams::default(),
                initial,
            ),
            OptimizerKind::Random => {
                // Default config first, then i.i.d. draws.
                let mut history = TrialHistory::new(0.25);
                let mut obj = objective;
                super::run_trial(&mut history, &candidate.id, &candidate.default_config, &mut obj);
                let remaining = stage2_budget.saturating_sub(1);
                if remaining > 0 {
                    let (_, rest) =
                        random_search(&candidate.space, &mut obj, remaining, opt_seed)?;
                    history.trials.extend(rest.trials);
                }
                super::finish(history)
            }
            OptimizerKind::Grid { resolution } => {
                let mut history = TrialHistory::new(0.25);
                let mut obj = objective;
                super::run_trial(&mut history, &candidate.id, &candidate.default_config, &mut obj);
                let remaining = stage2_budget.saturating_sub(1);
                if remaining > 0 {
                    let (_, rest) =
                        grid_search(&candidate.space, &mut obj, remaining, resolution)?;
                    history.trials.extend(rest.trials);
                }
                super::finish(history)
            }
        };
        let (trial, history) = outcome?;
        let cv = cv_cache
            .iter()
            .find(|(cfg, _)| *cfg == trial.config)
            .map(|(_, cv)| cv.clone())
            .unwrap_or_else(|| stage1[ci].cv.clone());
        consider(&candidate.id, &trial.config, trial.loss, cv, &mut best);
        stage2.push((candidate.id.clone(), history));
    }

    let (best_algorithm, best_config, best_loss, best_cv) =
        best.ok_or(CashError::AllTrialsFailed)?;
    Ok(CashResult {
        best_algorithm,
        best_config,
        best_loss,
        best_cv,
        stage1,
        stage2,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub winner: String,
    /// (id, metric score, final accuracy) per candidate, menu order.
    pub scores: Vec<(String, f64, f64)>,
}

/// Prequentially evaluate every online candidate on the same stream prefix
/// and return the best by the metric (ties keep menu order).
pub fn adaptive_model_select(
    candidates: &mut [(String, Box<dyn OnlineClassifier>)],
    prefix: &Dataset,
    metric: Metric,
) -> Result<SelectionOutcome, CashError> {
    if candidates.is_empty() {
        return Err(CashError::NoCandidates);
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for (id, model) in candidates.iter_mut() {
        let mut confusion = ConfusionCounts::new(prefix.schema.n_classes());
        for row in &prefix.rows {
            let Some(actual) = row.label else { continue };
            confusion.record(actual, model.predict_one(row));
            model.learn_one(row);
        }
        let m = classification_metrics(&confusion)
            .map_err(|e| CashError::Evaluation(e.to_string()))?;
        let score = match metric {
            Metric::Accuracy => m.accuracy,
            Metric::F1 => m.positive.f1,
        };
        scores.push((id.clone(), score, m.accuracy));
    }
    let winner = scores
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite scores"))
        .expect("non-empty")
        .0
        .clone();
    Ok(SelectionOutcome { winner, scores })
}
