//! Batch classifiers used as CASH candidates: Naive Bayes, KNN, CART
//! decision trees and random forests.
//!
//! All probability vectors are non-negative and sum to 1 within 1e-9;
//! `predict` is the argmax of `predict_proba` with ties broken toward the
//! lowest class id.

mod cart;
mod forest;
mod knn;
mod nb;

pub use cart::{CartClassifier, DtParams, MaxFeatures, SplitCriterion};
pub use forest::{RandomForest, RfParams};
pub use knn::KnnClassifier;
pub use nb::{GaussianNb, NbStats};
pub(crate) use nb::FeatureObserver;

use thiserror::Error;

use crate::data::{Dataset, Instance};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("dataset has no label column or no labeled rows")]
    Unlabeled,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Batch classifier contract.
pub trait Classifier {
    fn fit(&mut self, d: &Dataset) -> Result<(), LearnError>;
    /// Probability per class id; uniform when nothing was learned.
    fn predict_proba(&self, x: &Instance) -> Vec<f64>;
    fn predict(&self, x: &Instance) -> u32 {
        argmax(&self.predict_proba(x))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(proba: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, p) in proba.iter().enumerate().skip(1) {
        if *p > proba[best] {
            best = i;
        }
    }
    best as u32
}

/// Normalize a non-negative vector into a probability vector; an all-zero
/// vector becomes uniform.
pub(crate) fn normalize_proba(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        let n = v.len().max(1);
        return vec![1.0 / n as f64; n];
    }
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// Squared distance between instances over the given columns: numeric
/// dimensions contribute squared differences, categorical ones 0/1
/// mismatch; a missing cell paired with anything non-equal contributes 1.
pub(crate) fn mixed_squared_distance(a: &Instance, b: &Instance, cols: &[usize]) -> f64 {
    use crate::data::Value;
    cols.iter()
        .map(|&ci| match (a.values[ci], b.values[ci]) {
            (Value::Num(x), Value::Num(y)) => (x - y) * (x - y),
            (Value::Cat(x), Value::Cat(y)) => f64::from(x != y),
            (Value::Missing, Value::Missing) => 0.0,
            _ => 1.0,
        })
        .sum()
}
