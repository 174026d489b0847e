//! Random forests: seeded bootstrap samples of CART trees with per-split
//! feature subsampling; the ensemble probability is the mean of the tree
//! probability vectors.

use serde::{Deserialize, Serialize};

use super::cart::{CartClassifier, DtParams};
use super::{normalize_proba, Classifier, LearnError};
use crate::data::{Dataset, Instance};
use crate::seeding::{derive_seed_indexed, rng_from_seed};
use rand::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfParams {
    pub n_estimators: usize,
    pub tree: DtParams,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_estimators: 100,
            tree: DtParams {
                max_features: super::MaxFeatures::Sqrt,
                ..DtParams::default()
            },
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    params: RfParams,
    trees: Vec<CartClassifier>,
    n_classes: usize,
}

impl RandomForest {
    pub fn new(params: RfParams) -> Self {
        RandomForest {
            params,
            trees: Vec::new(),
            n_classes: 0,
        }
    }
}

impl Classifier for RandomForest {
    fn fit(&mut self, d: &Dataset) -> Result<(), LearnError> {
        if self.params.n_estimators == 0 {
            return Err(LearnError::InvalidParams(
                "n_estimators must be >= 1".into(),
            ));
        }
        if d.rows.is_empty() {
            return Err(LearnError::EmptyTraining);
        }
        self.n_classes = d.schema.n_classes();
        self.trees.clear();
        for t in 0..self.params.n_estimators {
            let tree_seed = derive_seed_indexed(self.params.seed, "rf-tree", t as u64);
            let sample = if self.params.bootstrap {
                let mut rng = rng_from_seed(derive_seed_indexed(
                    self.params.seed,
                    "rf-bootstrap",
                    t as u64,
                ));
                let mut boot = Dataset::new(d.schema.clone());
                for _ in 0..d.n_rows() {
                    let i = rng.gen_range(0..d.n_rows());
                    boot.rows.push(d.rows[i].clone());
                }
                boot
            } else {
                d.clone()
            };
            let mut tree = CartClassifier::new(DtParams {
                seed: tree_seed,
                ..self.params.tree.clone()
            });
            tree.fit(&sample)?;
            self.trees.push(tree);
        }
        Ok(())
    }

    fn predict_proba(&self, x: &Instance) -> Vec<f64> {
        if self.trees.is_empty() {
            return vec![1.0];
        }
        let mut acc = vec![0.0f64; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict_proba(x)) {
                *a += p;
            }
        }
        normalize_proba(acc)
    }
}
