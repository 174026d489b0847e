//! Incremental Naive Bayes: the batch learner's sufficient statistics,
//! updated one instance at a time. Replaying the same instances through
//! either path yields identical posteriors.

use super::OnlineClassifier;
use crate::data::{Instance, Schema};
use crate::offline::NbStats;

#[derive(Debug, Clone)]
pub struct IncrementalNb {
    schema: Schema,
    alpha: f64,
    stats: NbStats,
}

impl IncrementalNb {
    pub fn new(schema: &Schema, alpha: f64) -> Self {
        IncrementalNb {
            schema: schema.clone(),
            alpha,
            stats: NbStats::new(schema, alpha),
        }
    }
}

impl OnlineClassifier for IncrementalNb {
    fn learn_one(&mut self, x: &Instance) {
        self.stats.learn_one(x);
    }

    fn predict_proba_one(&self, x: &Instance) -> Vec<f64> {
        self.stats.posterior(x)
    }

    fn reset(&mut self) {
        self.stats = NbStats::new(&self.schema, self.alpha);
    }

    fn n_classes(&self) -> usize {
        self.stats.n_classes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Dataset, Value};
    use crate::offline::{Classifier, GaussianNb};
    use crate::seeding::rng_from_seed;
    use rand::Rng;

    fn schema() -> Schema {
        Schema {
            columns: vec![
                Column::numeric("x"),
                Column::categorical("c", vec!["a".into(), "b".into(), "q".into()]),
                Column::categorical("y", vec!["0".into(), "1".into()]),
            ],
            label_column: Some(2),
            class_labels: vec!["0".into(), "1".into()],
        }
    }

    #[test]
    fn uniform_prior_before_any_learning() {
        let nb = IncrementalNb::new(&schema(), 1.0);
        let x = Instance::new(vec![Value::Num(0.0), Value::Cat(0), Value::Missing]);
        assert_eq!(nb.predict_proba_one(&x), vec![0.5, 0.5]);
    }

    #[test]
    fn first_instance_sets_the_argmax() {
        let mut nb = IncrementalNb::new(&schema(), 1.0);
        let x = Instance {
            values: vec![Value::Num(1.0), Value::Cat(0), Value::Cat(1)],
            label: Some(1),
            weight: 1.0,
        };
        nb.learn_one(&x);
        assert_eq!(nb.predict_one(&x), 1);
    }

    #[test]
    fn hundred_instance_stream_matches_batch_fit() {
        let mut rng = rng_from_seed(21);
        let mut d = Dataset::new(schema());
        for _ in 0..100 {
            let y: u32 = rng.gen_range(0..2);
            let x = rng.gen::<f64>() + y as f64;
            let c: u32 = rng.gen_range(0..3);
            d.push(Instance {
                values: vec![Value::Num(x), Value::Cat(c), Value::Cat(y)],
                label: Some(y),
                weight: 1.0,
            })
            .unwrap();
        }
        let mut inc = IncrementalNb::new(&d.schema, 1.0);
        for r in &d.rows {
            inc.learn_one(r);
        }
        let mut batch = GaussianNb::new(1.0);
        batch.fit(&d).unwrap();
        for r in &d.rows {
            let (pi, pb) = (inc.predict_proba_one(r), batch.predict_proba(r));
            for (a, b) in pi.iter().zip(pb.iter()) {
                assert!((a - b).abs() < 1e-9, "{pi:?} vs {pb:?}");
            }
        }
    }

    #[test]
    fn reset_restores_uniform_prior() {
        let mut nb = IncrementalNb::new(&schema(), 1.0);
        let x = Instance {
            values: vec![Value::Num(1.0), Value::Cat(0), Value::Cat(0)],
            label: Some(0),
            weight: 1.0,
        };
        nb.learn_one(&x);
        nb.reset();
        assert_eq!(nb.predict_proba_one(&x), vec![0.5, 0.5]);
    }
}
