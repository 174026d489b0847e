//! Prequential (test-then-train) evaluation: every instance is scored
//! before the model learns it; the cumulative error is the running sum of
//! the loss.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ConfusionCounts;
use crate::data::{DataStream, Value};
use crate::drift::{DriftDetector, DriftStatus};
use crate::online::OnlineClassifier;

/// What a detector listens to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorFeed {
    /// The 0/1 prediction loss (performance-based detectors).
    PredictionLoss,
    /// A numeric feature column (distribution-based detectors).
    Feature(usize),
}

/// How the harness reacts when a detector fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftPolicy {
    LogOnly,
    /// Reset the model on drift: the simplest retraining strategy.
    ResetModel,
}

pub struct AttachedDetector {
    pub name: String,
    pub detector: Box<dyn DriftDetector + Send>,
    pub feed: DetectorFeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub index: usize,
    pub detector: String,
    pub status: DriftStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrequentialRecord {
    pub index: usize,
    pub predicted: u32,
    pub actual: u32,
    pub cumulative_loss: f64,
    pub cumulative_accuracy: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PrequentialTrace {
    pub records: Vec<PrequentialRecord>,
    pub drift_events: Vec<DriftEvent>,
    pub confusion: ConfusionCounts,
    /// Cumulative loss over the stream (0/1 loss: error count).
    pub final_loss: f64,
    /// 1 - loss/n for the 0/1 loss.
    pub final_accuracy: f64,
    pub instances: usize,
    pub skipped_unlabeled: usize,
    pub learn_seconds: f64,
    pub predict_seconds: f64,
}

/// Run strict test-then-train over the stream. Detectors fed the prediction
/// loss see each instance's 0/1 outcome; feature-fed detectors see the raw
/// feature value. `policy` decides whether a drift event also resets the
/// model. Unlabeled instances are skipped (counted).
pub fn prequential_eval(
    stream: &mut DataStream,
    model: &mut dyn OnlineClassifier,
    loss: impl Fn(u32, u32) -> f64,
    mut detectors: Vec<AttachedDetector>,
    policy: DriftPolicy,
    max_instances: Option<usize>,
) -> PrequentialTrace {
    let n_classes = stream.schema().n_classes();
    let mut confusion = ConfusionCounts::new(n_classes);
    let mut records = Vec::new();
    let mut drift_events = Vec::new();
    let mut cumulative_loss = 0.0f64;
    let mut correct = 0usize;
    let mut scored = 0usize;
    let mut skipped = 0usize;
    let mut learn_seconds = 0.0f64;
    let mut predict_seconds = 0.0f64;

    let limit = max_instances.unwrap_or(usize::MAX);
    let mut index = 0usize;
    while index < limit {
        let Some(x) = stream.next() else { break };
        let Some(actual) = x.label else {
            skipped += 1;
            index += 1;
            continue;
        };

        let t0 = Instant::now();
        let predicted = model.predict_one(&x);
        predict_seconds += t0.elapsed().as_secs_f64();

        let l = loss(actual, predicted);
        cumulative_loss += l;
        scored += 1;
        if predicted == actual {
            correct += 1;
        }
        confusion.record(actual, predicted);

        let mut reset_due = false;
        for att in detectors.iter_mut() {
            let value = match att.feed {
                DetectorFeed::PredictionLoss => f64::from(predicted != actual),
                DetectorFeed::Feature(col) => match x.values.get(col) {
                    Some(Value::Num(v)) => *v,
                    _ => continue,
                },
            };
            if let Ok(status) = att.detector.update(value) {
                if status != DriftStatus::Stable {
                    drift_events.push(DriftEvent {
                        index,
                        detector: att.name.clone(),
                        status,
                    });
                    if status == DriftStatus::Drift && policy == DriftPolicy::ResetModel {
                        reset_due = true;
                    }
                }
            }
        }
        if reset_due {
            model.reset();
        }

        let t1 = Instant::now();
        model.learn_one(&x);
        learn_seconds += t1.elapsed().as_secs_f64();

        records.push(PrequentialRecord {
            index,
            predicted,
            actual,
            cumulative_loss,
            cumulative_accuracy: correct as f64 / scored as f64,
        });
        index += 1;
    }

    PrequentialTrace {
        records,
        drift_events,
        confusion,
        final_loss: cumulative_loss,
        final_accuracy: if scored == 0 {
            0.0
        } else {
            correct as f64 / scored as f64
        },
        instances: scored,
        skipped_unlabeled: skipped,
        learn_seconds,
        predict_seconds,
    }
}

/// The 0/1 loss.
pub fn zero_one_loss(actual: u32, predicted: u32) -> f64 {
    f64::from(actual != predicted)
}
