//! Inverse-error weighted probability combiner over heterogeneous online
//! learners. Base weights are `1 / (prequential_error + eps)` and are
//! recomputed after every learning step, so well-performing bases dominate
//! the soft vote.

use super::ensemble::{arf, srp, weighted_vote};
use super::OnlineClassifier;
use crate::data::{Instance, Schema};
use crate::drift::DetectorKind;
use crate::seeding::derive_seed_indexed;

const WEIGHT_EPS: f64 = 0.01;

pub struct WeightedProbaCombiner {
    bases: Vec<(String, Box<dyn OnlineClassifier>)>,
    errors: Vec<f64>,
    seen: Vec<f64>,
    n_classes: usize,
}

impl WeightedProbaCombiner {
    pub fn new(bases: Vec<(String, Box<dyn OnlineClassifier>)>) -> Self {
        assert!(!bases.is_empty(), "need at least one base learner");
        let n_classes = bases[0].1.n_classes();
        let n = bases.len();
        WeightedProbaCombiner {
            bases,
            errors: vec![0.0; n],
            seen: vec![0.0; n],
            n_classes,
        }
    }

    /// The four-base arrangement used for drift-adaptive streams:
    /// ARF-ADWIN, ARF-DDM, SRP-ADWIN and SRP-DDM.
    pub fn default_four(schema: &Schema, n_models: usize, seed: u64) -> Self {
        let wiring: [(&str, DetectorKind, bool); 4] = [
            ("arf_adwin", DetectorKind::Adwin, false),
            ("arf_ddm", DetectorKind::Ddm, false),
            ("srp_adwin", DetectorKind::Adwin, true),
            ("srp_ddm", DetectorKind::Ddm, true),
        ];
        let bases: Vec<(String, Box<dyn OnlineClassifier>)> = wiring
            .iter()
            .enumerate()
            .map(|(i, (name, detector, subspace))| {
                let s = derive_seed_indexed(seed, "combiner-base", i as u64);
                let model: Box<dyn OnlineClassifier> = if *subspace {
                    Box::new(srp(schema, n_models, 0.6, *detector, s).expect("valid srp"))
                } else {
                    Box::new(arf(schema, n_models, *detector, s))
                };
                (name.to_string(), model)
            })
            .collect();
        WeightedProbaCombiner::new(bases)
    }

    pub fn base_names(&self) -> Vec<&str> {
        self.bases.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Running prequential error per base.
    pub fn base_errors(&self) -> Vec<f64> {
        self.errors
            .iter()
            .zip(self.seen.iter())
            .map(|(e, s)| if *s > 0.0 { e / s } else { 0.0 })
            .collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.base_errors()
            .iter()
            .map(|err| 1.0 / (err + WEIGHT_EPS))
            .collect()
    }
}

impl OnlineClassifier for WeightedProbaCombiner {
    fn learn_one(&mut self, x: &Instance) {
        let Some(label) = x.label else { return };
        for (i, (_, base)) in self.bases.iter_mut().enumerate() {
            let predicted = base.predict_one(x);
            self.seen[i] += 1.0;
            self.errors[i] += f64::from(predicted != label);
            base.learn_one(x);
        }
    }

    fn predict_proba_one(&self, x: &Instance) -> Vec<f64> {
        let probas: Vec<Vec<f64>> = self
            .bases
            .iter()
            .map(|(_, b)| b.predict_proba_one(x))
            .collect();
        weighted_vote(&probas, &self.weights())
    }

    fn reset(&mut self) {
        for (_, base) in &mut self.bases {
            base.reset();
        }
        self.errors.iter_mut().for_each(|e| *e = 0.0);
        self.seen.iter_mut().for_each(|s| *s = 0.0);
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        generate_stream, ConceptSpec, DriftKind, DriftStreamSpec, ThresholdRule, Value,
    };
    use crate::online::IncrementalNb;

    /// A base that always predicts a fixed class.
    struct Constant {
        class: u32,
        n_classes: usize,
    }

    impl OnlineClassifier for Constant {
        fn learn_one(&mut self, _x: &Instance) {}
        fn predict_proba_one(&self, _x: &Instance) -> Vec<f64> {
            let mut p = vec![0.0; self.n_classes];
            p[self.class as usize] = 1.0;
            p
        }
        fn reset(&mut self) {}
        fn n_classes(&self) -> usize {
            self.n_classes
        }
    }

    fn spec(seed: u64) -> DriftStreamSpec {
        DriftStreamSpec {
            drift_kind: DriftKind::Sudden,
            concepts: vec![
                ConceptSpec {
                    rules: vec![ThresholdRule {
                        feature: 0,
                        threshold: 0.5,
                        positive_above: true,
                    }],
                },
                ConceptSpec {
                    rules: vec![ThresholdRule {
                        feature: 1,
                        threshold: 0.5,
                        positive_above: true,
                    }],
                },
            ],
            n_features: 2,
            segment_length: 1500,
            transition_length: 0,
            noise_rate: 0.02,
            seed,
        }
    }

    #[test]
    fn equal_errors_give_uniform_weights_and_mean_probability() {
        let combiner = WeightedProbaCombiner::new(vec![
            (
                "always0".into(),
                Box::new(Constant {
                    class: 0,
                    n_classes: 2,
                }) as Box<dyn OnlineClassifier>,
            ),
            (
                "always1".into(),
                Box::new(Constant {
                    class: 1,
                    n_classes: 2,
                }),
            ),
        ]);
        let weights = combiner.weights();
        assert!((weights[0] - weights[1]).abs() < 1e-12);
        let x = Instance::new(vec![Value::Num(0.0), Value::Num(0.0), Value::Missing]);
        let p = combiner.predict_proba_one(&x);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn near_zero_error_base_dominates_the_argmax() {
        let d = generate_stream(&spec(5)).unwrap().take_dataset(400);
        // A perfect oracle base (matches concept 0) against a constant base.
        struct Oracle;
        impl OnlineClassifier for Oracle {
            fn learn_one(&mut self, _x: &Instance) {}
            fn predict_proba_one(&self, x: &Instance) -> Vec<f64> {
                let v = x.values[0].as_num().unwrap_or(0.0);
                if v > 0.5 {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                }
            }
            fn reset(&mut self) {}
            fn n_classes(&self) -> usize {
                2
            }
        }
        let mut combiner = WeightedProbaCombiner::new(vec![
            ("oracle".into(), Box::new(Oracle) as Box<dyn OnlineClassifier>),
            (
                "always0".into(),
                Box::new(Constant {
                    class: 0,
                    n_classes: 2,
                }),
            ),
        ]);
        for r in &d.rows {
            combiner.learn_one(r);
        }
        let weights = combiner.weights();
        assert!(weights[0] > weights[1] * 5.0, "{weights:?}");
        // Combiner argmax equals the oracle's on fresh points.
        for r in d.rows.iter().take(50) {
            let oracle_pred = u32::from(r.values[0].as_num().unwrap() > 0.5);
            assert_eq!(combiner.predict_one(r), oracle_pred);
        }
    }

    #[test]
    fn weights_update_after_every_learn_call() {
        let d = generate_stream(&spec(6)).unwrap().take_dataset(50);
        let mut combiner = WeightedProbaCombiner::new(vec![
            (
                "nb".into(),
                Box::new(IncrementalNb::new(&d.schema, 1.0)) as Box<dyn OnlineClassifier>,
            ),
            (
                "always0".into(),
                Box::new(Constant {
                    class: 0,
                    n_classes: 2,
                }),
            ),
        ]);
        let before = combiner.weights();
        for r in &d.rows {
            combiner.learn_one(r);
        }
        let after = combiner.weights();
        assert_ne!(before, after);
    }

    #[test]
    fn four_base_combiner_tracks_the_best_base_on_drift() {
        let d = generate_stream(&spec(9)).unwrap().take_dataset(3000);
        let mut combiner = WeightedProbaCombiner::default_four(&d.schema, 3, 17);
        let mut base_correct = vec![0usize; 4];
        let mut combined_correct = 0usize;
        for r in &d.rows {
            let label = r.label.unwrap();
            for (i, (_, base)) in combiner.bases.iter().enumerate() {
                if crate::offline::argmax(&base.predict_proba_one(r)) == label {
                    base_correct[i] += 1;
                }
            }
            if combiner.predict_one(r) == label {
                combined_correct += 1;
            }
            combiner.learn_one(r);
        }
        let n = d.n_rows() as f64;
        let best_base = base_correct.iter().copied().max().unwrap() as f64 / n;
        let combined = combined_correct as f64 / n;
        assert!(
            combined >= best_base - 0.01,
            "combiner {combined} vs best base {best_base}"
        );
    }
}
