//! Incremental decision trees: the Hoeffding tree and its eager EFDT
//! variant.
//!
//! Leaves keep class counts and per-feature class-conditional statistics
//! (categorical counts; per-class Gaussian summaries with a 10-point
//! candidate threshold grid for numeric features). Every `grace_period`
//! arrivals at a leaf the split criterion is checked: the Hoeffding mode
//! splits when the best attribute's information gain dominates the
//! runner-up by the Hoeffding bound (or the bound drops below the tie
//! threshold); the EFDT mode splits as soon as the best gain exceeds the
//! null (no-split) gain by the bound, and additionally re-evaluates
//! internal nodes, replacing a split once a different attribute dominates
//! the current one by the bound.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::OnlineClassifier;
use crate::data::{ColumnKind, Instance, Schema, Value};
use crate::offline::{normalize_proba, FeatureObserver, NbStats};
use crate::seeding::rng_from_seed;

/// Hoeffding bound for a statistic of range `R` after `n` observations:
/// `eps = sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> f64 {
    (range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafPrediction {
    MajorityClass,
    NaiveBayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    Hoeffding,
    Efdt,
}

#[derive(Debug, Clone)]
pub struct HtParams {
    /// Arrivals between split attempts at a node (n_min).
    pub grace_period: usize,
    /// Split confidence delta.
    pub split_confidence: f64,
    /// Tie threshold tau.
    pub tie_threshold: f64,
    pub max_depth: Option<usize>,
    pub leaf_prediction: LeafPrediction,
    pub mode: TreeMode,
    /// Per-leaf random split-candidate subsets of this size (adaptive
    /// random forest style) when set.
    pub subspace_size: Option<usize>,
    pub seed: u64,
}

impl Default for HtParams {
    fn default() -> Self {
        HtParams {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            max_depth: None,
            leaf_prediction: LeafPrediction::NaiveBayes,
            mode: TreeMode::Hoeffding,
            subspace_size: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HtTest {
    /// children[0] when value <= threshold, children[1] otherwise
    /// (missing values go right).
    NumericLe { col: usize, threshold: f64 },
    /// One child per category; missing values go to child 0.
    Nominal { col: usize },
}

impl HtTest {
    fn col(&self) -> usize {
        match *self {
            HtTest::NumericLe { col, .. } | HtTest::Nominal { col } => col,
        }
    }

    fn child_for(&self, x: &Instance, n_children: usize) -> usize {
        match *self {
            HtTest::NumericLe { col, threshold } => match x.values[col] {
                Value::Num(v) if v <= threshold => 0,
                _ => 1,
            },
            HtTest::Nominal { col } => match x.values[col] {
                Value::Cat(c) => (c as usize).min(n_children - 1),
                _ => 0,
            },
        }
    }
}

#[derive(Debug, Clone)]
struct NodeData {
    stats: NbStats,
    /// Split candidates for this node.
    candidates: Vec<usize>,
    weight_since_eval: f64,
    depth: usize,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(NodeData),
    Split {
        data: NodeData,
        test: HtTest,
        children: Vec<usize>,
    },
}

/// A candidate split and its information gain.
#[derive(Debug, Clone, Copy)]
struct Suggestion {
    test: HtTest,
    gain: f64,
}

#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    params: HtParams,
    schema: Schema,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    n_splits: usize,
    n_replacements: usize,
}

impl HoeffdingTree {
    pub fn new(schema: &Schema, params: HtParams) -> Self {
        let mut tree = HoeffdingTree {
            params,
            schema: schema.clone(),
            nodes: Vec::new(),
            rng: rng_from_seed(0),
            n_splits: 0,
            n_replacements: 0,
        };
        tree.rng = rng_from_seed(tree.params.seed);
        let root = tree.fresh_node_data(0);
        tree.nodes.push(Node::Leaf(root));
        tree
    }

    pub fn n_splits(&self) -> usize {
        self.n_splits
    }

    /// EFDT split replacements performed so far.
    pub fn n_replacements(&self) -> usize {
        self.n_replacements
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    fn fresh_node_data(&mut self, depth: usize) -> NodeData {
        let all = self.schema.feature_indices();
        let candidates = match self.params.subspace_size {
            Some(m) if m < all.len() => {
                let mut pool = all;
                pool.shuffle(&mut self.rng);
                pool.truncate(m.max(1));
                pool
            }
            _ => all,
        };
        NodeData {
            stats: NbStats::new(&self.schema, 1.0),
            candidates,
            weight_since_eval: 0.0,
            depth,
        }
    }

    fn gain_range(&self) -> f64 {
        (self.schema.n_classes().max(2) as f64).log2()
    }

    fn entropy(weights: &[f64]) -> f64 {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| {
                let p = w / total;
                -p * p.log2()
            })
            .sum()
    }

    /// Best split suggestion for one feature from the node's statistics.
    fn suggest_for_feature(&self, data: &NodeData, col: usize) -> Option<Suggestion> {
        let observer = data.stats.observer_for_col(col)?;
        match (self.schema.columns[col].kind, observer) {
            (ColumnKind::Numeric, FeatureObserver::Numeric(gaussians)) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut parent = vec![0.0f64; gaussians.len()];
                for (c, g) in gaussians.iter().enumerate() {
                    if let Some((gmin, gmax)) = g.range() {
                        lo = lo.min(gmin);
                        hi = hi.max(gmax);
                    }
                    parent[c] = g.weight();
                }
                if !(hi > lo) {
                    return None;
                }
                let total: f64 = parent.iter().sum();
                if total <= 0.0 {
                    return None;
                }
                let h_parent = Self::entropy(&parent);
                let mut best: Option<Suggestion> = None;
                for j in 1..=10 {
                    let threshold = lo + (hi - lo) * j as f64 / 11.0;
                    let left: Vec<f64> = gaussians
                        .iter()
                        .map(|g| g.weight() * g.cdf(threshold))
                        .collect();
                    let right: Vec<f64> = parent
                        .iter()
                        .zip(left.iter())
                        .map(|(p, l)| (p - l).max(0.0))
                        .collect();
                    let wl: f64 = left.iter().sum();
                    let wr: f64 = right.iter().sum();
                    if wl <= 0.0 || wr <= 0.0 {
                        continue;
                    }
                    let gain = h_parent
                        - (wl / total) * Self::entropy(&left)
                        - (wr / total) * Self::entropy(&right);
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        best = Some(Suggestion {
                            test: HtTest::NumericLe { col, threshold },
                            gain,
                        });
                    }
                }
                best
            }
            (ColumnKind::Categorical, FeatureObserver::Categorical { counts, .. }) => {
                let n_cats = self.schema.columns[col].categories.len().max(
                    counts.iter().map(Vec::len).max().unwrap_or(1),
                );
                let mut parent = vec![0.0f64; counts.len()];
                let mut per_cat = vec![vec![0.0f64; counts.len()]; n_cats];
                for (class, row) in counts.iter().enumerate() {
                    for (cat, &w) in row.iter().enumerate() {
                        parent[class] += w;
                        per_cat[cat][class] += w;
                    }
                }
                let total: f64 = parent.iter().sum();
                if total <= 0.0 {
                    return None;
                }
                let h_parent = Self::entropy(&parent);
                let weighted_children: f64 = per_cat
                    .iter()
                    .map(|dist| {
                        let w: f64 = dist.iter().sum();
                        (w / total) * Self::entropy(dist)
                    })
                    .sum();
                Some(Suggestion {
                    test: HtTest::Nominal { col },
                    gain: h_parent - weighted_children,
                })
            }
            _ => None,
        }
    }

    /// Ranked split suggestions (best first) for a node.
    fn suggestions(&self, data: &NodeData) -> Vec<Suggestion> {
        let mut out: Vec<Suggestion> = data
            .candidates
            .iter()
            .filter_map(|&col| self.suggest_for_feature(data, col))
            .collect();
        out.sort_by(|a, b| b.gain.partial_cmp(&a.gain).expect("finite gains"));
        out
    }

    fn should_split(&self, data: &NodeData) -> Option<HtTest> {
        let total = data.stats.total_weight();
        if total <= 0.0 {
            return None;
        }
        if Self::entropy(data.stats.class_weights()) <= 0.0 {
            return None;
        }
        let suggestions = self.suggestions(data);
        let best = suggestions.first()?;
        let eps = hoeffding_bound(self.gain_range(), self.params.split_confidence, total);
        match self.params.mode {
            TreeMode::Efdt => {
                // Null-split gain is zero: split as soon as the best
                // attribute clears the bound.
                (best.gain > eps).then_some(best.test)
            }
            TreeMode::Hoeffding => {
                let second_gain = suggestions.get(1).map_or(0.0, |s| s.gain);
                let dominant = best.gain - second_gain > eps;
                let tie = eps < self.params.tie_threshold && best.gain > 0.0;
                (dominant || tie).then_some(best.test)
            }
        }
    }

    fn n_children_for(&self, test: HtTest) -> usize {
        match test {
            HtTest::NumericLe { .. } => 2,
            HtTest::Nominal { col } => self.schema.columns[col].categories.len().max(2),
        }
    }

    fn make_split(&mut self, node_idx: usize, test: HtTest) {
        let depth = match &self.nodes[node_idx] {
            Node::Leaf(d) | Node::Split { data: d, .. } => d.depth,
        };
        let n_children = self.n_children_for(test);
        let mut children = Vec::with_capacity(n_children);
        for _ in 0..n_children {
            let data = self.fresh_node_data(depth + 1);
            self.nodes.push(Node::Leaf(data));
            children.push(self.nodes.len() - 1);
        }
        let data = match std::mem::replace(
            &mut self.nodes[node_idx],
            Node::Leaf(NodeData {
                stats: NbStats::new(&self.schema, 1.0),
                candidates: vec![],
                weight_since_eval: 0.0,
                depth,
            }),
        ) {
            Node::Leaf(mut d) | Node::Split { data: mut d, .. } => {
                d.weight_since_eval = 0.0;
                d
            }
        };
        self.nodes[node_idx] = Node::Split {
            data,
            test,
            children,
        };
    }

    /// EFDT internal-node re-evaluation: replace the split when a different
    /// attribute's gain dominates the current split attribute's by the
    /// bound. The subtree is discarded and regrown.
    fn reevaluate_split(&mut self, node_idx: usize) {
        let (total, current_col, best) = match &self.nodes[node_idx] {
            Node::Split { data, test, .. } => {
                let suggestions = self.suggestions(data);
                match suggestions.first() {
                    Some(best) => (data.stats.total_weight(), test.col(), *best),
                    None => return,
                }
            }
            Node::Leaf(_) => return,
        };
        if best.test.col() == current_col {
            return;
        }
        let current_gain = match &self.nodes[node_idx] {
            Node::Split { data, test, .. } => self
                .suggest_for_feature(data, test.col())
                .map_or(0.0, |s| s.gain),
            Node::Leaf(_) => return,
        };
        let eps = hoeffding_bound(self.gain_range(), self.params.split_confidence, total);
        if best.gain - current_gain > eps {
            self.make_split(node_idx, best.test);
            self.n_replacements += 1;
        }
    }
}

impl OnlineClassifier for HoeffdingTree {
    fn learn_one(&mut self, x: &Instance) {
        if x.label.is_none() {
            return;
        }
        let max_depth = self.params.max_depth;
        let grace = self.params.grace_period as f64;
        let mut idx = 0usize;
        loop {
            // Update the node's statistics and arrival counter.
            let (is_leaf, at_depth) = match &mut self.nodes[idx] {
                Node::Leaf(data) => {
                    data.stats.learn_one(x);
                    data.weight_since_eval += x.weight;
                    (true, data.depth)
                }
                Node::Split { data, .. } => {
                    data.stats.learn_one(x);
                    data.weight_since_eval += x.weight;
                    (false, data.depth)
                }
            };
            let _ = at_depth;
            if is_leaf {
                let due = match &self.nodes[idx] {
                    Node::Leaf(data) => {
                        data.weight_since_eval >= grace
                            && !max_depth.is_some_and(|m| data.depth >= m)
                    }
                    Node::Split { .. } => false,
                };
                if due {
                    let test = match &self.nodes[idx] {
                        Node::Leaf(data) => self.should_split(data),
                        Node::Split { .. } => None,
                    };
                    if let Some(test) = test {
                        self.make_split(idx, test);
                        self.n_splits += 1;
                    } else if let Node::Leaf(data) = &mut self.nodes[idx] {
                        data.weight_since_eval = 0.0;
                    }
                }
                return;
            }
            // Internal node: EFDT re-evaluates its split periodically.
            if self.params.mode == TreeMode::Efdt {
                let due = match &self.nodes[idx] {
                    Node::Split { data, .. } => data.weight_since_eval >= grace,
                    Node::Leaf(_) => false,
                };
                if due {
                    if let Node::Split { data, .. } = &mut self.nodes[idx] {
                        data.weight_since_eval = 0.0;
                    }
                    self.reevaluate_split(idx);
                    // The node may have become a fresh split; re-route from
                    // it either way.
                }
            }
            idx = match &self.nodes[idx] {
                Node::Split { test, children, .. } => {
                    children[test.child_for(x, children.len())]
                }
                Node::Leaf(_) => idx, // replaced mid-update; re-enter
            };
        }
    }

    fn predict_proba_one(&self, x: &Instance) -> Vec<f64> {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf(data) => {
                    let weights = data.stats.class_weights();
                    let total: f64 = weights.iter().sum();
                    if total <= 0.0 {
                        let n = self.n_classes().max(1);
                        return vec![1.0 / n as f64; n];
                    }
                    return match self.params.leaf_prediction {
                        LeafPrediction::MajorityClass => normalize_proba(weights.to_vec()),
                        LeafPrediction::NaiveBayes => data.stats.posterior(x),
                    };
                }
                Node::Split { test, children, .. } => {
                    idx = children[test.child_for(x, children.len())];
                }
            }
        }
    }

    fn reset(&mut self) {
        *self = HoeffdingTree::new(&self.schema, self.params.clone());
    }

    fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }
}
