//! Gaussian / categorical Naive Bayes.
//!
//! Class priors multiply per-feature likelihoods: Laplace-smoothed category
//! frequencies for categorical features, per-class Gaussians for numeric
//! ones. Accumulation is in log space; the incremental and batch learners
//! share these sufficient statistics, so their posteriors agree exactly.

use super::{normalize_proba, Classifier, LearnError};
use crate::data::{ColumnKind, Dataset, Instance, Schema, Value};

const SIGMA_FLOOR: f64 = 1e-9;

/// Weighted running Gaussian summary (Welford), tracking the observed range.
#[derive(Debug, Clone)]
pub(crate) struct GaussianEstimator {
    weight: f64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for GaussianEstimator {
    fn default() -> Self {
        GaussianEstimator {
            weight: 0.0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl GaussianEstimator {
    pub(crate) fn update(&mut self, value: f64, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        let new_weight = self.weight + weight;
        let delta = value - self.mean;
        self.mean += (weight / new_weight) * delta;
        self.m2 += weight * delta * (value - self.mean);
        self.weight = new_weight;
        self.min = self.min.min(value);
        self.max = self.max.max(value);
    }

    pub(crate) fn range(&self) -> Option<(f64, f64)> {
        if self.weight > 0.0 {
            Some((self.min, self.max))
        } else {
            None
        }
    }

    pub(crate) fn weight(&self) -> f64 {
        self.weight
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn stdev(&self) -> f64 {
        if self.weight <= 0.0 {
            return SIGMA_FLOOR;
        }
        (self.m2 / self.weight).sqrt().max(SIGMA_FLOOR)
    }

    pub(crate) fn log_density(&self, value: f64) -> f64 {
        let sigma = self.stdev();
        let z = (value - self.mean) / sigma;
        -0.5 * (std::f64::consts::TAU.ln() + 2.0 * sigma.ln() + z * z)
    }

    /// Probability mass below `threshold` under the fitted Gaussian.
    pub(crate) fn cdf(&self, threshold: f64) -> f64 {
        let sigma = self.stdev();
        let z = (threshold - self.mean) / (sigma * std::f64::consts::SQRT_2);
        0.5 * (1.0 + erf(z))
    }
}

/// Abramowitz & Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

#[derive(Debug, Clone)]
pub(crate) enum FeatureObserver {
    /// Per-class Gaussian summaries.
    Numeric(Vec<GaussianEstimator>),
    /// Per-class per-category weighted counts.
    Categorical { counts: Vec<Vec<f64>>, n_categories: usize },
}

/// Sufficient statistics for Naive Bayes over a fixed schema; updatable one
/// instance at a time.
#[derive(Debug, Clone)]
pub struct NbStats {
    alpha: f64,
    feature_cols: Vec<usize>,
    class_weights: Vec<f64>,
    observers: Vec<FeatureObserver>,
}

impl NbStats {
    pub fn new(schema: &Schema, alpha: f64) -> Self {
        let n_classes = schema.n_classes();
        let feature_cols = schema.feature_indices();
        let observers = feature_cols
            .iter()
            .map(|&ci| match schema.columns[ci].kind {
                ColumnKind::Numeric => {
                    FeatureObserver::Numeric(vec![GaussianEstimator::default(); n_classes])
                }
                ColumnKind::Categorical => FeatureObserver::Categorical {
                    counts: vec![
                        vec![0.0; schema.columns[ci].categories.len().max(1)];
                        n_classes
                    ],
                    n_categories: schema.columns[ci].categories.len().max(1),
                },
            })
            .collect();
        NbStats {
            alpha,
            feature_cols,
            class_weights: vec![0.0; n_classes],
            observers,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_weights.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.class_weights.iter().sum()
    }

    pub(crate) fn class_weights(&self) -> &[f64] {
        &self.class_weights
    }

    pub(crate) fn observer_for_col(&self, col: usize) -> Option<&FeatureObserver> {
        let idx = self.feature_cols.iter().position(|&c| c == col)?;
        self.observers.get(idx)
    }

    pub fn learn_one(&mut self, x: &Instance) {
        let Some(label) = x.label else { return };
        let y = label as usize;
        if y >= self.class_weights.len() {
            return;
        }
        let w = x.weight;
        self.class_weights[y] += w;
        for (fi, &ci) in self.feature_cols.iter().enumerate() {
            match (&mut self.observers[fi], x.values[ci]) {
                (FeatureObserver::Numeric(gs), Value::Num(v)) => gs[y].update(v, w),
                (
                    FeatureObserver::Categorical { counts, n_categories },
                    Value::Cat(c),
                ) => {
                    let c = c as usize;
                    if c >= *n_categories {
                        *n_categories = c + 1;
                        for row in counts.iter_mut() {
                            row.resize(c + 1, 0.0);
                        }
                    }
                    counts[y][c] += w;
                }
                _ => {}
            }
        }
    }

    /// Posterior probabilities. Classes absent from training keep their
    /// (zero) prior; with no training at all the result is uniform.
    pub fn posterior(&self, x: &Instance) -> Vec<f64> {
        let n_classes = self.n_classes();
        let total = self.total_weight();
        if total <= 0.0 || n_classes == 0 {
            return vec![1.0 / n_classes.max(1) as f64; n_classes.max(1)];
        }
        let mut log_scores = vec![f64::NEG_INFINITY; n_classes];
        for (y, score) in log_scores.iter_mut().enumerate() {
            let prior = self.class_weights[y] / total;
            if prior <= 0.0 {
                continue;
            }
            let mut acc = prior.ln();
            for (fi, &ci) in self.feature_cols.iter().enumerate() {
                match (&self.observers[fi], x.values[ci]) {
                    (FeatureObserver::Numeric(gs), Value::Num(v)) => {
                        if gs[y].weight() > 0.0 {
                            acc += gs[y].log_density(v);
                        }
                    }
                    (
                        FeatureObserver::Categorical { counts, n_categories },
                        Value::Cat(c),
                    ) => {
                        let c = c as usize;
                        let count = counts[y].get(c).copied().unwrap_or(0.0);
                        let denom =
                            self.class_weights[y] + self.alpha * *n_categories as f64;
                        if denom > 0.0 {
                            let p = (count + self.alpha) / denom;
                            if p > 0.0 {
                                acc += p.ln();
                            } else {
                                acc = f64::NEG_INFINITY;
                            }
                        }
                    }
                    _ => {}
                }
            }
            *score = acc;
        }
        let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return vec![1.0 / n_classes as f64; n_classes];
        }
        normalize_proba(log_scores.iter().map(|s| (s - max).exp()).collect())
    }
}

/// Batch Naive Bayes classifier with additive smoothing `alpha`.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    alpha: f64,
    stats: Option<NbStats>,
}

impl GaussianNb {
    pub fn new(alpha: f64) -> Self {
        GaussianNb { alpha, stats: None }
    }
}

impl Default for GaussianNb {
    fn default() -> Self {
        GaussianNb::new(1.0)
    }
}

impl Classifier for GaussianNb {
    fn fit(&mut self, d: &Dataset) -> Result<(), LearnError> {
        if !d.is_labeled() {
            return Err(LearnError::Unlabeled);
        }
        let mut stats = NbStats::new(&d.schema, self.alpha);
        for row in &d.rows {
            stats.learn_one(row);
        }
        self.stats = Some(stats);
        Ok(())
    }

    fn predict_proba(&self, x: &Instance) -> Vec<f64> {
        match &self.stats {
            Some(stats) => stats.posterior(x),
            None => vec![1.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Schema};
    use crate::offline::argmax;

    fn schema_2cat() -> Schema {
        Schema {
            columns: vec![
                Column::categorical("f", vec!["a".into(), "b".into()]),
                Column::categorical("y", vec!["0".into(), "1".into()]),
            ],
            label_column: Some(1),
            class_labels: vec!["0".into(), "1".into()],
        }
    }

    fn rows_2cat(pairs: &[(u32, u32)]) -> Dataset {
        let mut d = Dataset::new(schema_2cat());
        for &(f, y) in pairs {
            d.push(Instance {
                values: vec![Value::Cat(f), Value::Cat(y)],
                label: Some(y),
                weight: 1.0,
            })
            .unwrap();
        }
        d
    }

    #[test]
    fn single_class_training_always_predicts_it() {
        let d = rows_2cat(&[(0, 1), (1, 1), (0, 1)]);
        let mut nb = GaussianNb::default();
        nb.fit(&d).unwrap();
        for f in 0..2 {
            let x = Instance::new(vec![Value::Cat(f), Value::Missing]);
            let p = nb.predict_proba(&x);
            assert!((p[1] - 1.0).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn separating_feature_dominates_with_small_alpha() {
        let d = rows_2cat(&[(0, 0), (0, 0), (1, 1), (1, 1)]);
        let mut nb = GaussianNb::new(1e-9);
        nb.fit(&d).unwrap();
        let x0 = Instance::new(vec![Value::Cat(0), Value::Missing]);
        let x1 = Instance::new(vec![Value::Cat(1), Value::Missing]);
        assert_eq!(nb.predict(&x0), 0);
        assert_eq!(nb.predict(&x1), 1);
    }

    #[test]
    fn four_row_posterior_matches_hand_computed_bayes() {
        // Rows: (a,0) (a,0) (b,0) (b,1); query f=b, alpha=1.
        // Priors: P(0)=3/4, P(1)=1/4.
        // P(b|0) = (1+1)/(3+2) = 2/5;  P(b|1) = (1+1)/(1+2) = 2/3.
        // Posterior(0) ∝ 0.75*0.4 = 0.3; Posterior(1) ∝ 0.25*(2/3) = 1/6.
        let d = rows_2cat(&[(0, 0), (0, 0), (1, 0), (1, 1)]);
        let mut nb = GaussianNb::new(1.0);
        nb.fit(&d).unwrap();
        let x = Instance::new(vec![Value::Cat(1), Value::Missing]);
        let p = nb.predict_proba(&x);
        let unnorm0 = 0.75 * (2.0 / 5.0);
        let unnorm1 = 0.25 * (2.0 / 3.0);
        let expected0 = unnorm0 / (unnorm0 + unnorm1);
        assert!((p[0] - expected0).abs() < 1e-9, "{p:?} vs {expected0}");
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_likelihoods_separate_numeric_classes() {
        let schema = Schema {
            columns: vec![
                Column::numeric("x"),
                Column::categorical("y", vec!["lo".into(), "hi".into()]),
            ],
            label_column: Some(1),
            class_labels: vec!["lo".into(), "hi".into()],
        };
        let mut d = Dataset::new(schema);
        for i in 0..20 {
            let (v, y) = if i % 2 == 0 {
                (i as f64 * 0.01, 0)
            } else {
                (10.0 + i as f64 * 0.01, 1)
            };
            d.push(Instance {
                values: vec![Value::Num(v), Value::Cat(y)],
                label: Some(y),
                weight: 1.0,
            })
            .unwrap();
        }
        let mut nb = GaussianNb::default();
        nb.fit(&d).unwrap();
        let near_lo = Instance::new(vec![Value::Num(0.05), Value::Missing]);
        let near_hi = Instance::new(vec![Value::Num(10.05), Value::Missing]);
        assert_eq!(nb.predict(&near_lo), 0);
        assert_eq!(nb.predict(&near_hi), 1);
    }

    #[test]
    fn scaling_all_priors_uniformly_keeps_argmax() {
        // Duplicate every row: priors scale, argmax stays.
        let d = rows_2cat(&[(0, 0), (0, 0), (1, 0), (1, 1)]);
        let mut doubled = d.clone();
        let rows = doubled.rows.clone();
        doubled.rows.extend(rows);
        let (mut a, mut b) = (GaussianNb::default(), GaussianNb::default());
        a.fit(&d).unwrap();
        b.fit(&doubled).unwrap();
        for f in 0..2u32 {
            let x = Instance::new(vec![Value::Cat(f), Value::Missing]);
            assert_eq!(argmax(&a.predict_proba(&x)), argmax(&b.predict_proba(&x)));
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let d = rows_2cat(&[(0, 0), (1, 1), (0, 1), (1, 0), (0, 0)]);
        let mut nb = GaussianNb::default();
        nb.fit(&d).unwrap();
        for f in 0..2u32 {
            let x = Instance::new(vec![Value::Cat(f), Value::Missing]);
            let sum: f64 = nb.predict_proba(&x).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn erf_matches_known_values() {
        // Approximation error is bounded by 1.5e-7.
        assert!(erf(0.0).abs() < 1.5e-7);
        assert!((erf(1.0) - 0.8427007929).abs() < 1.5e-7);
        assert!((erf(-1.0) + 0.8427007929).abs() < 1.5e-7);
    }
}
