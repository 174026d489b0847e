//! Incremental learners and drift-adaptive ensembles.
//!
//! Every model here is a single-writer state machine: `learn_one` calls are
//! exclusive, prediction may interleave between updates, and prediction
//! before any learning returns the uniform prior.

mod combiner;
mod ensemble;
mod hoeffding;
mod nb;

pub use combiner::WeightedProbaCombiner;
pub use ensemble::{
    arf, leveraging_bagging, online_bagging, srp, AdaptiveEnsembleParams, DriftEnsemble,
    SubspaceMode,
};
pub use hoeffding::{hoeffding_bound, HoeffdingTree, HtParams, LeafPrediction, TreeMode};
pub use nb::IncrementalNb;

use crate::data::Instance;
use crate::offline::argmax;

/// Incremental classifier contract: learn one instance at a time, predict
/// class probabilities at any point.
pub trait OnlineClassifier: Send {
    fn learn_one(&mut self, x: &Instance);
    /// Probability per class id; sums to 1 within 1e-9. Uniform before any
    /// learning.
    fn predict_proba_one(&self, x: &Instance) -> Vec<f64>;
    /// Restore the freshly-constructed state.
    fn reset(&mut self);
    fn n_classes(&self) -> usize;

    fn predict_one(&self, x: &Instance) -> u32 {
        argmax(&self.predict_proba_one(x))
    }
}
