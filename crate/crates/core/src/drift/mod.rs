//! Concept-drift detectors.
//!
//! Performance-based detectors (DDM, EDDM) monitor a learner's 0/1 error
//! stream; distribution-based detectors (ADWIN, windowed IE/KL distance)
//! monitor a bounded value stream directly. All expose
//! `update(value) -> DriftStatus` and are single-writer state machines.

mod adwin;
mod ddm;
mod window;

pub use adwin::Adwin;
pub use ddm::{Ddm, Eddm};
pub use window::{entropy, ie_distance, kl_divergence, DistanceMetric, WindowPair};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Outcome of feeding one value to a detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftStatus {
    Stable,
    Warning,
    Drift,
}

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("detector expects a binary 0/1 loss, got {0}")]
    NonBinaryInput(f64),
    #[error("value {0} is not finite or outside the configured range")]
    OutOfRange(f64),
    #[error("probability vector is not normalized (sum = {0})")]
    Unnormalized(f64),
    #[error("probability vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Common detector interface used by ensembles and the evaluation harness.
pub trait DriftDetector {
    /// Feed one observation; performance-based detectors expect a 0/1 loss.
    fn update(&mut self, value: f64) -> Result<DriftStatus, DriftError>;
    /// Restore the freshly-constructed state.
    fn reset(&mut self);
}

/// Detector menu used in configs and search spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Adwin,
    Ddm,
    Eddm,
}

impl DetectorKind {
    pub fn build(self) -> Box<dyn DriftDetector + Send> {
        match self {
            DetectorKind::Adwin => Box::new(Adwin::default()),
            DetectorKind::Ddm => Box::new(Ddm::default()),
            DetectorKind::Eddm => Box::new(Eddm::default()),
        }
    }

    /// Variant tuned for warning signalling (same algorithm; DDM warning
    /// levels fire before drift levels by construction).
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Adwin => "adwin",
            DetectorKind::Ddm => "ddm",
            DetectorKind::Eddm => "eddm",
        }
    }
}
