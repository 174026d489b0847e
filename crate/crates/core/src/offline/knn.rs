//! K-nearest-neighbors classification: majority label of the k
//! Euclidean-nearest training rows. Distance ties break toward lower row
//! indices, vote ties toward the lowest class id.

use super::{mixed_squared_distance, normalize_proba, Classifier, LearnError};
use crate::data::{Dataset, Instance};

#[derive(Debug, Clone)]
pub struct KnnClassifier {
    k: usize,
    train: Option<Dataset>,
}

impl KnnClassifier {
    pub fn new(k: usize) -> Self {
        KnnClassifier { k, train: None }
    }
}

impl Classifier for KnnClassifier {
    fn fit(&mut self, d: &Dataset) -> Result<(), LearnError> {
        if d.rows.is_empty() {
            return Err(LearnError::EmptyTraining);
        }
        if !d.is_labeled() {
            return Err(LearnError::Unlabeled);
        }
        if self.k == 0 || self.k > d.n_rows() {
            return Err(LearnError::InvalidParams(format!(
                "k = {} must be in [1, {}]",
                self.k,
                d.n_rows()
            )));
        }
        self.train = Some(d.clone());
        Ok(())
    }

    fn predict_proba(&self, x: &Instance) -> Vec<f64> {
        let Some(train) = &self.train else {
            return vec![1.0];
        };
        let cols = train.schema.feature_indices();
        let mut dists: Vec<(f64, usize)> = train
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (mixed_squared_distance(x, r, &cols), i))
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0f64; train.schema.n_classes()];
        for &(_, i) in dists.iter().take(self.k) {
            if let Some(y) = train.rows[i].label {
                votes[y as usize] += train.rows[i].weight;
            }
        }
        normalize_proba(votes)
    }
}
