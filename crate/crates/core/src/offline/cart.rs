//! CART decision trees: greedy best-impurity-decrease splits over numeric
//! thresholds (midpoints of sorted distinct values) and categorical
//! equality tests, with optional cost-complexity pruning minimizing
//! `empirical risk + alpha * |leaves|`.

use serde::{Deserialize, Serialize};

use super::{normalize_proba, Classifier, LearnError};
use crate::data::{ColumnKind, Dataset, Instance, Value};
use crate::seeding::rng_from_seed;
use rand::seq::SliceRandom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    Entropy,
}

impl SplitCriterion {
    fn impurity(self, counts: &[f64]) -> f64 {
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            SplitCriterion::Gini => {
                1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
            }
            SplitCriterion::Entropy => counts
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| {
                    let p = c / total;
                    -p * p.log2()
                })
                .sum(),
        }
    }
}

/// Features considered per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(m) => m.min(n_features),
        }
        .max(1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtParams {
    pub criterion: SplitCriterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub ccp_alpha: f64,
    pub seed: u64,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams {
            criterion: SplitCriterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            ccp_alpha: 0.0,
            seed: 0,
        }
    }
}

impl DtParams {
    fn validate(&self) -> Result<(), LearnError> {
        if self.min_samples_split < 2 {
            return Err(LearnError::InvalidParams(
                "min_samples_split must be >= 2".into(),
            ));
        }
        if self.min_samples_leaf < 1 {
            return Err(LearnError::InvalidParams(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if self.ccp_alpha < 0.0 {
            return Err(LearnError::InvalidParams("ccp_alpha must be >= 0".into()));
        }
        if self.max_depth == Some(0) {
            return Err(LearnError::InvalidParams("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum SplitTest {
    /// `x[col] <= threshold` goes left; missing goes right.
    NumericLe { col: usize, threshold: f64 },
    /// `x[col] == category` goes left; missing goes right.
    CatEq { col: usize, category: u32 },
}

impl SplitTest {
    fn goes_left(&self, x: &Instance) -> bool {
        match *self {
            SplitTest::NumericLe { col, threshold } => {
                matches!(x.values[col], Value::Num(v) if v <= threshold)
            }
            SplitTest::CatEq { col, category } => {
                matches!(x.values[col], Value::Cat(c) if c == category)
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        counts: Vec<f64>,
    },
    Split {
        test: SplitTest,
        left: usize,
        right: usize,
        counts: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct CartClassifier {
    params: DtParams,
    nodes: Vec<Node>,
    n_classes: usize,
}

impl CartClassifier {
    pub fn new(params: DtParams) -> Self {
        CartClassifier {
            params,
            nodes: Vec::new(),
            n_classes: 0,
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn depth_of(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + depth_of(nodes, *left).max(depth_of(nodes, *right))
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            depth_of(&self.nodes, 0)
        }
    }

    fn class_counts(&self, d: &Dataset, rows: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &i in rows {
            if let Some(y) = d.rows[i].label {
                counts[y as usize] += d.rows[i].weight;
            }
        }
        counts
    }

    /// Best (test, weighted-child impurity) for one feature, or None.
    fn best_split_for_feature(
        &self,
        d: &Dataset,
        rows: &[usize],
        col: usize,
        parent_counts: &[f64],
    ) -> Option<(SplitTest, f64)> {
        let criterion = self.params.criterion;
        let total: f64 = parent_counts.iter().sum();
        let min_leaf = self.params.min_samples_leaf as f64;
        match d.schema.columns[col].kind {
            ColumnKind::Numeric => {
                let mut pairs: Vec<(f64, u32, f64)> = rows
                    .iter()
                    .filter_map(|&i| {
                        let y = d.rows[i].label?;
                        d.rows[i].values[col]
                            .as_num()
                            .map(|v| (v, y, d.rows[i].weight))
                    })
                    .collect();
                if pairs.len() < 2 {
                    return None;
                }
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
                let missing_counts: Vec<f64> = {
                    // Rows with a missing value in this column always route
                    // right, so they join the right-hand counts.
                    let mut mc = vec![0.0; self.n_classes];
                    for &i in rows {
                        if d.rows[i].values[col].is_missing() {
                            if let Some(y) = d.rows[i].label {
                                mc[y as usize] += d.rows[i].weight;
                            }
                        }
                    }
                    mc
                };
                let mut left = vec![0.0; self.n_classes];
                let mut best: Option<(SplitTest, f64)> = None;
                for w in pairs.windows(2) {
                    let (v, y, weight) = w[0];
                    left[y as usize] += weight;
                    let next_v = w[1].0;
                    if next_v <= v {
                        continue;
                    }
                    let threshold = v + (next_v - v) / 2.0;
                    let left_total: f64 = left.iter().sum();
                    let right_total = total - left_total;
                    if left_total < min_leaf || right_total < min_leaf {
                        continue;
                    }
                    let right: Vec<f64> = parent_counts
                        .iter()
                        .zip(left.iter())
                        .map(|(p, l)| p - l)
                        .collect();
                    let _ = &missing_counts; // already included in parent-minus-left
                    let score = (left_total / total) * criterion.impurity(&left)
                        + (right_total / total) * criterion.impurity(&right);
                    if best.as_ref().is_none_or(|(_, s)| score < *s) {
                        best = Some((SplitTest::NumericLe { col, threshold }, score));
                    }
                }
                best
            }
            ColumnKind::Categorical => {
                let n_cats = d.schema.columns[col].categories.len().max(1);
                let mut per_cat = vec![vec![0.0f64; self.n_classes]; n_cats];
                for &i in rows {
                    if let (Value::Cat(c), Some(y)) = (d.rows[i].values[col], d.rows[i].label) {
                        if (c as usize) < n_cats {
                            per_cat[c as usize][y as usize] += d.rows[i].weight;
                        }
                    }
                }
                let mut best: Option<(SplitTest, f64)> = None;
                for (cat, left) in per_cat.iter().enumerate() {
                    let left_total: f64 = left.iter().sum();
                    let right_total = total - left_total;
                    if left_total < min_leaf || right_total < min_leaf {
                        continue;
                    }
                    let right: Vec<f64> = parent_counts
                        .iter()
                        .zip(left.iter())
                        .map(|(p, l)| p - l)
                        .collect();
                    let score = (left_total / total) * criterion.impurity(left)
                        + (right_total / total) * criterion.impurity(&right);
                    if best.as_ref().is_none_or(|(_, s)| score < *s) {
                        best = Some((
                            SplitTest::CatEq {
                                col,
                                category: cat as u32,
                            },
                            score,
                        ));
                    }
                }
                best
            }
        }
    }

    fn build(
        &mut self,
        d: &Dataset,
        rows: Vec<usize>,
        depth: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> usize {
        let counts = self.class_counts(d, &rows);
        let impurity = self.params.criterion.impurity(&counts);
        let stop = rows.len() < self.params.min_samples_split
            || impurity <= 0.0
            || self.params.max_depth.is_some_and(|m| depth >= m);
        if !stop {
            let feature_cols = d.schema.feature_indices();
            let m = self.params.max_features.resolve(feature_cols.len());
            let candidates: Vec<usize> = if m >= feature_cols.len() {
                feature_cols
            } else {
                let mut shuffled = feature_cols;
                shuffled.shuffle(rng);
                shuffled.truncate(m);
                shuffled
            };
            let mut best: Option<(SplitTest, f64)> = None;
            for col in candidates {
                if let Some((test, score)) = self.best_split_for_feature(d, &rows, col, &counts) {
                    if best.as_ref().is_none_or(|(_, s)| score < *s) {
                        best = Some((test, score));
                    }
                }
            }
            // Zero-gain splits are allowed (concavity guarantees the child
            // impurity never exceeds the parent's); XOR-style concepts need
            // them. Termination holds because both sides stay non-empty.
            if let Some((test, _score)) = best {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| test.goes_left(&d.rows[i]));
                if !left_rows.is_empty() && !right_rows.is_empty() {
                    let idx = self.nodes.len();
                    self.nodes.push(Node::Leaf { counts: vec![] }); // placeholder
                    let left = self.build(d, left_rows, depth + 1, rng);
                    let right = self.build(d, right_rows, depth + 1, rng);
                    self.nodes[idx] = Node::Split {
                        test,
                        left,
                        right,
                        counts,
                    };
                    return idx;
                }
            }
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        idx
    }

    /// Weakest-link cost-complexity pruning: repeatedly collapse the
    /// internal node with the smallest `g(t) = (R(t) - R(T_t)) / (|T_t| - 1)`
    /// while `g(t) <= ccp_alpha`.
    fn prune(&mut self, total_weight: f64) {
        if total_weight <= 0.0 {
            return;
        }
        loop {
            let mut weakest: Option<(f64, usize)> = None;
            for i in 0..self.nodes.len() {
                if let Node::Split { counts, .. } = &self.nodes[i] {
                    let node_risk = risk(counts, total_weight);
                    let (subtree_risk, leaves) = self.subtree_risk(i, total_weight);
                    if leaves <= 1 {
                        continue;
                    }
                    let g = (node_risk - subtree_risk) / (leaves - 1) as f64;
                    if weakest.is_none_or(|(wg, _)| g < wg) {
                        weakest = Some((g, i));
                    }
                }
            }
            match weakest {
                Some((g, i)) if g <= self.params.ccp_alpha => {
                    let counts = match &self.nodes[i] {
                        Node::Split { counts, .. } => counts.clone(),
                        Node::Leaf { .. } => unreachable!(),
                    };
                    self.nodes[i] = Node::Leaf { counts };
                    self.compact();
                }
                _ => break,
            }
        }
    }

    /// Rebuild the arena keeping only nodes reachable from the root.
    fn compact(&mut self) {
        fn copy(old: &[Node], i: usize, out: &mut Vec<Node>) -> usize {
            match &old[i] {
                Node::Leaf { counts } => {
                    out.push(Node::Leaf {
                        counts: counts.clone(),
                    });
                    out.len() - 1
                }
                Node::Split {
                    test,
                    left,
                    right,
                    counts,
                } => {
                    let idx = out.len();
                    out.push(Node::Leaf { counts: vec![] }); // placeholder
                    let l = copy(old, *left, out);
                    let r = copy(old, *right, out);
                    out[idx] = Node::Split {
                        test: *test,
                        left: l,
                        right: r,
                        counts: counts.clone(),
                    };
                    idx
                }
            }
        }
        if self.nodes.is_empty() {
            return;
        }
        let mut fresh = Vec::with_capacity(self.nodes.len());
        copy(&self.nodes, 0, &mut fresh);
        self.nodes = fresh;
    }

    fn subtree_risk(&self, i: usize, total_weight: f64) -> (f64, usize) {
        match &self.nodes[i] {
            Node::Leaf { counts } => (risk(counts, total_weight), 1),
            Node::Split { left, right, .. } => {
                let (rl, ll) = self.subtree_risk(*left, total_weight);
                let (rr, lr) = self.subtree_risk(*right, total_weight);
                (rl + rr, ll + lr)
            }
        }
    }

    fn leaf_counts(&self, x: &Instance) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    test, left, right, ..
                } => {
                    i = if test.goes_left(x) { *left } else { *right };
                }
            }
        }
    }
}

/// Misclassification risk of a node acting as a leaf, relative to the
/// whole training set.
fn risk(counts: &[f64], total_weight: f64) -> f64 {
    let node_total: f64 = counts.iter().sum();
    let majority = counts.iter().copied().fold(0.0, f64::max);
    (node_total - majority) / total_weight
}

impl Classifier for CartClassifier {
    fn fit(&mut self, d: &Dataset) -> Result<(), LearnError> {
        self.params.validate()?;
        if d.rows.is_empty() {
            return Err(LearnError::EmptyTraining);
        }
        if !d.is_labeled() {
            return Err(LearnError::Unlabeled);
        }
        self.n_classes = d.schema.n_classes();
        self.nodes.clear();
        let mut rng = rng_from_seed(self.params.seed);
        let rows: Vec<usize> = (0..d.n_rows()).collect();
        self.build(d, rows, 0, &mut rng);
        if self.params.ccp_alpha > 0.0 {
            let total_weight: f64 = d.rows.iter().map(|r| r.weight).sum();
            self.prune(total_weight);
        }
        Ok(())
    }

    fn predict_proba(&self, x: &Instance) -> Vec<f64> {
        if self.nodes.is_empty() {
            return vec![1.0];
        }
        normalize_proba(self.leaf_counts(x).to_vec())
    }
}
