//! Seeded synthetic drift-stream generation.
//!
//! Concepts are axis-aligned threshold rules over numeric features drawn
//! uniformly from [0,1]; an instance is labeled class 1 when every rule of
//! the active concept holds, class 0 otherwise. Drift kinds:
//!
//! - **Sudden**: the concept switches instantly at each segment boundary and
//!   never reverts (the last concept persists).
//! - **Gradual**: over a transition window starting at each boundary, the
//!   probability of drawing from the incoming concept rises linearly 0→1.
//! - **Recurring**: concepts cycle with period `concepts.len() * segment_length`,
//!   earlier concepts returning verbatim.
//!
//! Labels are flipped with probability `noise_rate`. Identical spec + seed
//! yields identical streams.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Column, DataError, Dataset, Instance, Schema, Value};
use crate::seeding::rng_from_seed;

/// Drift taxonomy for synthetic streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Sudden,
    Gradual,
    Recurring,
}

/// A single axis-aligned rule: feature value strictly above (or at/below)
/// a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub feature: usize,
    pub threshold: f64,
    /// Rule holds when `x[feature] > threshold` if true, `<=` otherwise.
    pub positive_above: bool,
}

impl ThresholdRule {
    fn holds(&self, features: &[f64]) -> bool {
        if self.positive_above {
            features[self.feature] > self.threshold
        } else {
            features[self.feature] <= self.threshold
        }
    }
}

/// A labeling concept: conjunction of at most three threshold rules.
/// An empty rule set labels everything class 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSpec {
    pub rules: Vec<ThresholdRule>,
}

impl ConceptSpec {
    pub fn classify(&self, features: &[f64]) -> u32 {
        u32::from(self.rules.iter().all(|r| r.holds(features)))
    }
}

/// Specification of a synthetic drift stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStreamSpec {
    pub drift_kind: DriftKind,
    pub concepts: Vec<ConceptSpec>,
    pub n_features: usize,
    pub segment_length: usize,
    /// Gradual only; length of the mixing window after each boundary.
    #[serde(default)]
    pub transition_length: usize,
    #[serde(default)]
    pub noise_rate: f64,
    pub seed: u64,
}

impl DriftStreamSpec {
    /// Field-by-field validation.
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if self.concepts.len() < 2 {
            problems.push(format!(
                "concepts: need at least 2, got {}",
                self.concepts.len()
            ));
        }
        if self.n_features == 0 {
            problems.push("n_features: must be positive".to_string());
        }
        if self.segment_length == 0 {
            problems.push("segment_length: must be positive".to_string());
        }
        if self.drift_kind != DriftKind::Gradual && self.transition_length != 0 {
            problems.push(format!(
                "transition_length: must be 0 for {:?} drift, got {}",
                self.drift_kind, self.transition_length
            ));
        }
        if self.transition_length > self.segment_length {
            problems.push(format!(
                "transition_length: {} exceeds segment_length {}",
                self.transition_length, self.segment_length
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            problems.push(format!("noise_rate: {} outside [0,1]", self.noise_rate));
        }
        for (ci, c) in self.concepts.iter().enumerate() {
            if c.rules.len() > 3 {
                problems.push(format!("concepts[{ci}]: more than 3 rules"));
            }
            for r in &c.rules {
                if r.feature >= self.n_features {
                    problems.push(format!(
                        "concepts[{ci}]: rule references feature {} but n_features is {}",
                        r.feature, self.n_features
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidSpec(problems))
        }
    }

    /// Active concept mix at instance index `i`: the base concept plus, for
    /// gradual drift inside a transition window, the incoming concept and its
    /// draw probability.
    pub fn concept_mix_at(&self, i: usize) -> (usize, Option<(usize, f64)>) {
        let k = self.concepts.len();
        let s = i / self.segment_length;
        match self.drift_kind {
            DriftKind::Sudden => (s.min(k - 1), None),
            DriftKind::Recurring => (s % k, None),
            DriftKind::Gradual => {
                let offset = i - s * self.segment_length;
                if s >= 1 && s < k && offset < self.transition_length {
                    let p_new = (offset as f64 + 0.5) / self.transition_length as f64;
                    (s - 1, Some((s, p_new)))
                } else {
                    (s.min(k - 1), None)
                }
            }
        }
    }

    /// Ground-truth concept change points up to `n` instances, i.e. the
    /// segment boundaries where the active concept actually changes.
    pub fn change_points(&self, n: usize) -> Vec<usize> {
        let k = self.concepts.len();
        let mut points = Vec::new();
        let mut boundary = self.segment_length;
        while boundary < n {
            let segment = boundary / self.segment_length;
            let changes = match self.drift_kind {
                DriftKind::Sudden | DriftKind::Gradual => segment < k,
                DriftKind::Recurring => true,
            };
            if changes {
                points.push(boundary);
            }
            boundary += self.segment_length;
        }
        points
    }

    /// The schema generated streams conform to: numeric features `f0..`,
    /// plus a categorical `label` column with classes `0` / `1`.
    pub fn schema(&self) -> Schema {
        let mut columns: Vec<Column> = (0..self.n_features)
            .map(|i| Column::numeric(format!("f{i}")))
            .collect();
        let class_labels = vec!["0".to_string(), "1".to_string()];
        columns.push(Column::categorical("label", class_labels.clone()));
        Schema {
            label_column: Some(columns.len() - 1),
            columns,
            class_labels,
        }
    }
}

/// Single-consumer pull iterator over instances with a fixed schema.
pub struct DataStream {
    schema: Schema,
    iter: Box<dyn Iterator<Item = Instance> + Send>,
}

impl DataStream {
    pub fn new(schema: Schema, iter: Box<dyn Iterator<Item = Instance> + Send>) -> Self {
        DataStream { schema, iter }
    }

    pub fn from_dataset(d: Dataset) -> Self {
        DataStream {
            schema: d.schema,
            iter: Box::new(d.rows.into_iter()),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Pull up to `n` instances into a dataset.
    pub fn take_dataset(&mut self, n: usize) -> Dataset {
        let schema = self.schema.clone();
        let rows: Vec<Instance> = self.iter.by_ref().take(n).collect();
        Dataset { schema, rows }
    }
}

impl Iterator for DataStream {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        self.iter.next()
    }
}

struct Generator {
    spec: DriftStreamSpec,
    rng: ChaCha8Rng,
    index: usize,
}

impl Iterator for Generator {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        let spec = &self.spec;
        let mut features = vec![0.0f64; spec.n_features];
        for f in features.iter_mut() {
            *f = self.rng.gen::<f64>();
        }
        // Mixing and noise draws are consumed unconditionally so the feature
        // sequence depends only on (spec, seed).
        let mix_draw = self.rng.gen::<f64>();
        let noise_draw = self.rng.gen::<f64>();

        let (base, incoming) = spec.concept_mix_at(self.index);
        let concept = match incoming {
            Some((next, p_new)) if mix_draw < p_new => next,
            _ => base,
        };
        let mut label = spec.concepts[concept].classify(&features);
        if noise_draw < spec.noise_rate {
            label = 1 - label;
        }

        let mut values: Vec<Value> = features.into_iter().map(Value::Num).collect();
        values.push(Value::Cat(label));
        self.index += 1;
        Some(Instance {
            values,
            label: Some(label),
            weight: 1.0,
        })
    }
}

/// Build the (unbounded) synthetic stream described by `spec`.
pub fn generate_stream(spec: &DriftStreamSpec) -> Result<DataStream, DataError> {
    spec.validate()?;
    let schema = spec.schema();
    let rng = rng_from_seed(spec.seed);
    Ok(DataStream::new(
        schema,
        Box::new(Generator {
            spec: spec.clone(),
            rng,
            index: 0,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(feature: usize, threshold: f64, positive_above: bool) -> ThresholdRule {
        ThresholdRule {
            feature,
            threshold,
            positive_above,
        }
    }

    fn two_concepts() -> Vec<ConceptSpec> {
        vec![
            ConceptSpec {
                rules: vec![rule(0, 0.5, true)],
            },
            ConceptSpec {
                rules: vec![rule(1, 0.5, true)],
            },
        ]
    }

    fn spec(kind: DriftKind, segment: usize, transition: usize) -> DriftStreamSpec {
        DriftStreamSpec {
            drift_kind: kind,
            concepts: two_concepts(),
            n_features: 2,
            segment_length: segment,
            transition_length: transition,
            noise_rate: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn sudden_switches_exactly_at_boundary() {
        let s = spec(DriftKind::Sudden, 1000, 0);
        let mut stream = generate_stream(&s).unwrap();
        let d = stream.take_dataset(2000);
        for (i, row) in d.rows.iter().enumerate() {
            let f0 = row.values[0].as_num().unwrap();
            let f1 = row.values[1].as_num().unwrap();
            let expected = if i < 1000 {
                u32::from(f0 > 0.5)
            } else {
                u32::from(f1 > 0.5)
            };
            assert_eq!(row.label, Some(expected), "instance {i}");
        }
    }

    #[test]
    fn recurring_concepts_return_verbatim() {
        let s = spec(DriftKind::Recurring, 500, 0);
        for i in 0..500 {
            assert_eq!(s.concept_mix_at(i).0, s.concept_mix_at(i + 1000).0);
        }
        assert_eq!(s.concept_mix_at(0).0, 0);
        assert_eq!(s.concept_mix_at(500).0, 1);
        assert_eq!(s.concept_mix_at(1000).0, 0);
    }

    #[test]
    fn identical_spec_and_seed_yield_identical_prefix() {
        let s = spec(DriftKind::Sudden, 100, 0);
        let a = generate_stream(&s).unwrap().take_dataset(500);
        let b = generate_stream(&s).unwrap().take_dataset(500);
        assert_eq!(a, b);
    }

    #[test]
    fn gradual_mixing_fraction_is_half_over_the_window() {
        // Concepts with constant, opposite labels make the drawn concept
        // directly observable from the emitted label.
        let all_ones = ConceptSpec { rules: vec![] };
        let all_zeros = ConceptSpec {
            rules: vec![rule(0, 2.0, true)],
        };
        let mut hits = 0usize;
        let mut total = 0usize;
        for seed in 0..100u64 {
            let s = DriftStreamSpec {
                drift_kind: DriftKind::Gradual,
                concepts: vec![all_zeros.clone(), all_ones.clone()],
                n_features: 1,
                segment_length: 1000,
                transition_length: 200,
                noise_rate: 0.0,
                seed,
            };
            let mut stream = generate_stream(&s).unwrap();
            let d = stream.take_dataset(1200);
            for row in &d.rows[1000..1200] {
                total += 1;
                if row.label == Some(1) {
                    hits += 1;
                }
            }
        }
        let fraction = hits as f64 / total as f64;
        assert!(
            (fraction - 0.5).abs() <= 0.05,
            "new-concept fraction {fraction}"
        );
    }

    #[test]
    fn invalid_spec_reports_each_field() {
        let s = DriftStreamSpec {
            drift_kind: DriftKind::Sudden,
            concepts: vec![ConceptSpec { rules: vec![] }],
            n_features: 0,
            segment_length: 0,
            transition_length: 3,
            noise_rate: 1.5,
            seed: 0,
        };
        match s.validate() {
            Err(DataError::InvalidSpec(problems)) => {
                let text = problems.join("\n");
                for field in [
                    "concepts",
                    "n_features",
                    "segment_length",
                    "transition_length",
                    "noise_rate",
                ] {
                    assert!(text.contains(field), "missing {field} in: {text}");
                }
            }
            other => panic!("expected InvalidSpec, got {other:?}"),
        }
    }

    #[test]
    fn change_points_match_taxonomy() {
        let sudden = spec(DriftKind::Sudden, 1000, 0);
        assert_eq!(sudden.change_points(5000), vec![1000]);
        let recurring = spec(DriftKind::Recurring, 500, 0);
        assert_eq!(recurring.change_points(2100), vec![500, 1000, 1500, 2000]);
    }

    #[test]
    fn noise_flips_labels_at_the_configured_rate() {
        let mut s = spec(DriftKind::Sudden, 10_000, 0);
        s.noise_rate = 0.25;
        let clean = {
            let mut c = s.clone();
            c.noise_rate = 0.0;
            generate_stream(&c).unwrap().take_dataset(10_000)
        };
        let noisy = generate_stream(&s).unwrap().take_dataset(10_000);
        let flips = clean
            .rows
            .iter()
            .zip(noisy.rows.iter())
            .filter(|(a, b)| a.label != b.label)
            .count();
        let rate = flips as f64 / 10_000.0;
        assert!((rate - 0.25).abs() < 0.02, "flip rate {rate}");
    }
}
