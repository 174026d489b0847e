//! Drift-adaptive online ensembles over Hoeffding trees: plain online
//! bagging (Poisson(1)), leveraging bagging (Poisson(6) + per-member
//! detector resets), adaptive random forest (per-leaf feature subsets,
//! warning-triggered background trees, drift-triggered replacement) and an
//! SRP-style ensemble (per-member global feature subspaces, otherwise
//! ARF-like wiring).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::hoeffding::{HoeffdingTree, HtParams};
use super::OnlineClassifier;
use crate::data::{Instance, Schema, Value};
use crate::drift::{Adwin, DetectorKind, DriftDetector, DriftStatus};
use crate::offline::normalize_proba;
use crate::seeding::{derive_seed_indexed, rng_from_seed};

/// Feature wiring of ensemble members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubspaceMode {
    /// Members see all features.
    Full,
    /// Per-leaf random split-candidate subsets of size m (ARF style).
    PerSplit(usize),
    /// Per-member global subspace of ceil(fraction * F) features (SRP
    /// style); members see only their projection of each instance.
    Global(f64),
}

#[derive(Debug, Clone)]
pub struct AdaptiveEnsembleParams {
    pub n_models: usize,
    pub lambda_poisson: f64,
    pub drift_detector: Option<DetectorKind>,
    pub warning_detector: Option<DetectorKind>,
    pub subspace: SubspaceMode,
    pub tree: HtParams,
    pub seed: u64,
}

impl AdaptiveEnsembleParams {
    fn validate(&self) -> Result<(), String> {
        if self.n_models == 0 || self.n_models > 100 {
            return Err(format!("n_models {} outside [1, 100]", self.n_models));
        }
        if !(self.lambda_poisson > 0.0) {
            return Err(format!("lambda_poisson {} must be > 0", self.lambda_poisson));
        }
        if let SubspaceMode::Global(fraction) = self.subspace {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(format!("subspace fraction {fraction} outside (0,1]"));
            }
        }
        Ok(())
    }
}

fn build_drift(kind: DetectorKind) -> Box<dyn DriftDetector + Send> {
    kind.build()
}

/// Warning detectors are tuned more sensitive so they fire before the drift
/// detector of the same kind.
fn build_warning(kind: DetectorKind) -> Box<dyn DriftDetector + Send> {
    match kind {
        DetectorKind::Adwin => Box::new(Adwin::new(0.01)),
        other => other.build(),
    }
}

struct Member {
    model: HoeffdingTree,
    /// Global-subspace projection columns; None sees everything.
    projection: Option<Vec<usize>>,
    drift: Option<Box<dyn DriftDetector + Send>>,
    warning: Option<Box<dyn DriftDetector + Send>>,
    background: Option<HoeffdingTree>,
    correct: f64,
    seen: f64,
    rng: ChaCha8Rng,
}

impl Member {
    fn project(&self, x: &Instance, schema: &Schema) -> Instance {
        match &self.projection {
            None => x.clone(),
            Some(cols) => {
                let mut out = x.clone();
                for ci in schema.feature_indices() {
                    if !cols.contains(&ci) {
                        out.values[ci] = Value::Missing;
                    }
                }
                out
            }
        }
    }

    /// Running-accuracy vote weight, smoothed away from zero.
    fn weight(&self) -> f64 {
        (self.correct + 1.0) / (self.seen + 2.0)
    }
}

fn poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    let limit = (-lambda).exp();
    let mut k = 0u64;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p < limit {
            return k;
        }
        k += 1;
    }
}

/// Soft vote: sum of `weight * proba` renormalized. Zero-weight members
/// contribute nothing.
pub(crate) fn weighted_vote(probas: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n_classes = probas.first().map_or(1, Vec::len);
    let mut acc = vec![0.0f64; n_classes];
    for (p, &w) in probas.iter().zip(weights.iter()) {
        for (a, v) in acc.iter_mut().zip(p.iter()) {
            *a += w * v;
        }
    }
    normalize_proba(acc)
}

/// Shared machinery behind the bagging / ARF / SRP ensembles.
pub struct DriftEnsemble {
    schema: Schema,
    params: AdaptiveEnsembleParams,
    members: Vec<Member>,
    replacements: usize,
}

impl DriftEnsemble {
    pub fn new(schema: &Schema, params: AdaptiveEnsembleParams) -> Result<Self, String> {
        params.validate()?;
        let mut ensemble = DriftEnsemble {
            schema: schema.clone(),
            params,
            members: Vec::new(),
            replacements: 0,
        };
        ensemble.members = (0..ensemble.params.n_models)
            .map(|i| ensemble.build_member(i as u64, 0))
            .collect();
        Ok(ensemble)
    }

    fn tree_params(&self, seed: u64) -> HtParams {
        let subspace_size = match self.params.subspace {
            SubspaceMode::PerSplit(m) => Some(m),
            _ => None,
        };
        HtParams {
            subspace_size,
            seed,
            ..self.params.tree.clone()
        }
    }

    fn build_member(&self, index: u64, generation: u64) -> Member {
        let base = derive_seed_indexed(self.params.seed, "member", index);
        let seed = derive_seed_indexed(base, "generation", generation);
        let projection = match self.params.subspace {
            SubspaceMode::Global(fraction) => {
                let all = self.schema.feature_indices();
                let size = ((fraction * all.len() as f64).ceil() as usize)
                    .clamp(1, all.len());
                let mut pool = all;
                pool.shuffle(&mut rng_from_seed(derive_seed_indexed(
                    base, "subspace", 0,
                )));
                pool.truncate(size);
                pool.sort_unstable();
                Some(pool)
            }
            _ => None,
        };
        Member {
            model: HoeffdingTree::new(&self.schema, self.tree_params(seed)),
            projection,
            drift: self.params.drift_detector.map(build_drift),
            warning: self.params.warning_detector.map(build_warning),
            background: None,
            correct: 0.0,
            seen: 0.0,
            rng: rng_from_seed(derive_seed_indexed(base, "poisson", generation)),
        }
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    /// Foreground model replacements triggered by drift so far.
    pub fn n_replacements(&self) -> usize {
        self.replacements
    }

    /// Per-member global subspaces (SRP mode).
    pub fn member_subspaces(&self) -> Vec<Option<Vec<usize>>> {
        self.members.iter().map(|m| m.projection.clone()).collect()
    }

    /// Per-member running (correct, seen) counters.
    pub fn member_records(&self) -> Vec<(f64, f64)> {
        self.members.iter().map(|m| (m.correct, m.seen)).collect()
    }
}

impl OnlineClassifier for DriftEnsemble {
    fn learn_one(&mut self, x: &Instance) {
        let Some(label) = x.label else { return };
        let lambda = self.params.lambda_poisson;
        let schema = self.schema.clone();
        let mut to_rebuild: Vec<usize> = Vec::new();
        for (mi, member) in self.members.iter_mut().enumerate() {
            let projected = member.project(x, &schema);
            let predicted = member.model.predict_one(&projected);
            let err = f64::from(predicted != label);
            member.seen += 1.0;
            member.correct += 1.0 - err;

            // Warning first: it arms the background tree that a later drift
            // signal promotes.
            if let Some(w) = member.warning.as_mut() {
                if matches!(w.update(err), Ok(DriftStatus::Drift)) && member.background.is_none() {
                    member.background = Some(HoeffdingTree::new(
                        &schema,
                        HtParams {
                            seed: derive_seed_indexed(
                                self.params.seed,
                                "background",
                                (mi as u64) << 32 | member.seen as u64,
                            ),
                            subspace_size: match self.params.subspace {
                                SubspaceMode::PerSplit(m) => Some(m),
                                _ => None,
                            },
                            ..self.params.tree.clone()
                        },
                    ));
                    w.reset();
                }
            }

            let mut drifted = false;
            if let Some(d) = member.drift.as_mut() {
                if matches!(d.update(err), Ok(DriftStatus::Drift)) {
                    drifted = true;
                }
            }
            if drifted {
                match member.background.take() {
                    Some(bg) => {
                        member.model = bg;
                        if let Some(d) = member.drift.as_mut() {
                            d.reset();
                        }
                        if let Some(w) = member.warning.as_mut() {
                            w.reset();
                        }
                        member.correct = 0.0;
                        member.seen = 0.0;
                        self.replacements += 1;
                    }
                    None => {
                        to_rebuild.push(mi);
                    }
                }
            }

            let k = poisson(lambda, &mut member.rng);
            if k > 0 {
                let mut weighted = projected;
                weighted.weight = x.weight * k as f64;
                member.model.learn_one(&weighted);
                if let Some(bg) = member.background.as_mut() {
                    bg.learn_one(&weighted);
                }
            }
        }
        for mi in to_rebuild {
            let seen = self.members[mi].seen as u64;
            self.members[mi] = self.build_member(mi as u64, seen.max(1));
            self.replacements += 1;
        }
    }

    fn predict_proba_one(&self, x: &Instance) -> Vec<f64> {
        if self.members.is_empty() {
            return vec![1.0 / self.n_classes().max(1) as f64; self.n_classes().max(1)];
        }
        let probas: Vec<Vec<f64>> = self
            .members
            .iter()
            .map(|m| m.model.predict_proba_one(&m.project(x, &self.schema)))
            .collect();
        let weights: Vec<f64> = self.members.iter().map(Member::weight).collect();
        weighted_vote(&probas, &weights)
    }

    fn reset(&mut self) {
        *self = DriftEnsemble::new(&self.schema, self.params.clone()).expect("params validated");
    }

    fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }
}

/// Plain online bagging: Poisson(1) replication, no detectors.
pub fn online_bagging(schema: &Schema, n_models: usize, seed: u64) -> DriftEnsemble {
    DriftEnsemble::new(
        schema,
        AdaptiveEnsembleParams {
            n_models,
            lambda_poisson: 1.0,
            drift_detector: None,
            warning_detector: None,
            subspace: SubspaceMode::Full,
            tree: HtParams::default(),
            seed,
        },
    )
    .expect("valid bagging params")
}

/// Leveraging bagging: Poisson(6) replication with a per-member ADWIN that
/// resets the member on drift.
pub fn leveraging_bagging(schema: &Schema, n_models: usize, seed: u64) -> DriftEnsemble {
    DriftEnsemble::new(
        schema,
        AdaptiveEnsembleParams {
            n_models,
            lambda_poisson: 6.0,
            drift_detector: Some(DetectorKind::Adwin),
            warning_detector: None,
            subspace: SubspaceMode::Full,
            tree: HtParams::default(),
            seed,
        },
    )
    .expect("valid leveraging-bagging params")
}

/// Adaptive random forest: per-leaf subsets of ceil(sqrt(F)) features,
/// Poisson(6), per-tree warning/drift detectors with background trees.
pub fn arf(schema: &Schema, n_models: usize, detector: DetectorKind, seed: u64) -> DriftEnsemble {
    let m = (schema.n_features() as f64).sqrt().ceil() as usize;
    DriftEnsemble::new(
        schema,
        AdaptiveEnsembleParams {
            n_models,
            lambda_poisson: 6.0,
            drift_detector: Some(detector),
            warning_detector: Some(detector),
            subspace: SubspaceMode::PerSplit(m.max(1)),
            tree: HtParams::default(),
            seed,
        },
    )
    .expect("valid arf params")
}

/// SRP-style ensemble: per-member global subspaces, otherwise ARF wiring.
pub fn srp(
    schema: &Schema,
    n_models: usize,
    subspace_fraction: f64,
    detector: DetectorKind,
    seed: u64,
) -> Result<DriftEnsemble, String> {
    DriftEnsemble::new(
        schema,
        AdaptiveEnsembleParams {
            n_models,
            lambda_poisson: 6.0,
            drift_detector: Some(detector),
            warning_detector: Some(detector),
            subspace: SubspaceMode::Global(subspace_fraction),
            tree: HtParams::default(),
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        generate_stream, ConceptSpec, DriftKind, DriftStreamSpec, ThresholdRule,
    };

    fn drift_spec(seed: u64, segment: usize) -> DriftStreamSpec {
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
                        positive_above: false,
                    }],
                },
            ],
            n_features: 4,
            segment_length: segment,
            transition_length: 0,
            noise_rate: 0.0,
            seed,
        }
    }

    #[test]
    fn poisson_mean_is_lambda() {
        let mut rng = rng_from_seed(1);
        let n = 20_000;
        let sum: u64 = (0..n).map(|_| poisson(6.0, &mut rng)).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 6.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn zero_weight_member_does_not_change_vote() {
        let probas = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.5, 0.5]];
        let with = weighted_vote(&probas, &[0.7, 0.3, 0.0]);
        let without = weighted_vote(&probas[..2].to_vec(), &[0.7, 0.3]);
        for (a, b) in with.iter().zip(without.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_member_full_features_reduces_to_poisson_weighted_ht() {
        let spec = drift_spec(3, 100_000);
        let d = generate_stream(&spec).unwrap().take_dataset(2000);
        let mut ensemble = DriftEnsemble::new(
            &d.schema,
            AdaptiveEnsembleParams {
                n_models: 1,
                lambda_poisson: 6.0,
                drift_detector: None,
                warning_detector: None,
                subspace: SubspaceMode::Full,
                tree: HtParams::default(),
                seed: 11,
            },
        )
        .unwrap();
        // Replay the exact Poisson draws against a bare tree.
        let member_seed = derive_seed_indexed(11, "member", 0);
        let tree_seed = derive_seed_indexed(member_seed, "generation", 0);
        let mut rng = rng_from_seed(derive_seed_indexed(member_seed, "poisson", 0));
        let mut tree = HoeffdingTree::new(&d.schema, HtParams {
            seed: tree_seed,
            ..HtParams::default()
        });
        for r in &d.rows {
            ensemble.learn_one(r);
            let k = poisson(6.0, &mut rng);
            if k > 0 {
                let mut weighted = r.clone();
                weighted.weight = k as f64;
                tree.learn_one(&weighted);
            }
        }
        for r in d.rows.iter().take(50) {
            assert_eq!(ensemble.predict_one(r), tree.predict_one(r));
        }
    }

    #[test]
    fn stationary_stream_has_no_replacements_in_median_seed() {
        let mut replacement_counts = Vec::new();
        for seed in 0..3u64 {
            let spec = drift_spec(seed, 1_000_000); // boundary never reached
            let d = generate_stream(&spec).unwrap().take_dataset(10_000);
            let mut ensemble = arf(&d.schema, 3, DetectorKind::Adwin, seed);
            for r in &d.rows {
                ensemble.learn_one(r);
            }
            replacement_counts.push(ensemble.n_replacements());
        }
        replacement_counts.sort_unstable();
        assert_eq!(
            replacement_counts[replacement_counts.len() / 2],
            0,
            "median replacements {replacement_counts:?}"
        );
    }

    #[test]
    fn sudden_drift_triggers_replacements_quickly() {
        let mut hits = 0;
        let seeds = 10u64;
        for seed in 0..seeds {
            let spec = drift_spec(100 + seed, 1000);
            let d = generate_stream(&spec).unwrap().take_dataset(1500);
            let mut ensemble = arf(&d.schema, 3, DetectorKind::Adwin, seed);
            let mut replaced_in_window = false;
            for (i, r) in d.rows.iter().enumerate() {
                let before = ensemble.n_replacements();
                ensemble.learn_one(r);
                if i >= 1000 && i < 1500 && ensemble.n_replacements() > before {
                    replaced_in_window = true;
                    break;
                }
            }
            if replaced_in_window {
                hits += 1;
            }
        }
        assert!(hits >= 9, "replacements in window for only {hits}/{seeds} seeds");
    }

    #[test]
    fn member_count_never_shrinks() {
        let spec = drift_spec(7, 500);
        let d = generate_stream(&spec).unwrap().take_dataset(3000);
        let mut ensemble = arf(&d.schema, 5, DetectorKind::Adwin, 2);
        for r in &d.rows {
            ensemble.learn_one(r);
            assert_eq!(ensemble.n_members(), 5);
        }
        assert!(ensemble.n_replacements() > 0);
    }

    #[test]
    fn srp_subspace_sizes_match_ceiling_rule() {
        let spec = DriftStreamSpec {
            n_features: 10,
            ..drift_spec(0, 1000)
        };
        let schema = spec.schema();
        let ensemble = srp(&schema, 4, 0.6, DetectorKind::Adwin, 5).unwrap();
        for sub in ensemble.member_subspaces() {
            assert_eq!(sub.expect("srp members have subspaces").len(), 6);
        }
    }

    #[test]
    fn srp_subspaces_differ_across_members() {
        let spec = DriftStreamSpec {
            n_features: 10,
            ..drift_spec(0, 1000)
        };
        let schema = spec.schema();
        let ensemble = srp(&schema, 6, 0.4, DetectorKind::Adwin, 9).unwrap();
        let subs = ensemble.member_subspaces();
        let distinct: std::collections::BTreeSet<Vec<usize>> =
            subs.into_iter().flatten().collect();
        assert!(distinct.len() > 1, "all members drew the same subspace");
    }

    #[test]
    fn fraction_outside_unit_interval_is_rejected() {
        let schema = drift_spec(0, 100).schema();
        assert!(srp(&schema, 2, 0.0, DetectorKind::Adwin, 0).is_err());
        assert!(srp(&schema, 2, 1.5, DetectorKind::Adwin, 0).is_err());
    }

    #[test]
    fn seeded_runs_reproduce_member_records() {
        let spec = drift_spec(15, 800);
        let d = generate_stream(&spec).unwrap().take_dataset(2000);
        let run = || {
            let mut e = leveraging_bagging(&d.schema, 3, 21);
            for r in &d.rows {
                e.learn_one(r);
            }
            (e.member_records(), e.n_replacements())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn k_zero_draw_leaves_member_untouched() {
        // With lambda tiny, k = 0 almost surely: the tree never learns.
        let schema = drift_spec(0, 100).schema();
        let mut ensemble = DriftEnsemble::new(
            &schema,
            AdaptiveEnsembleParams {
                n_models: 1,
                lambda_poisson: 1e-9,
                drift_detector: None,
                warning_detector: None,
                subspace: SubspaceMode::Full,
                tree: HtParams::default(),
                seed: 0,
            },
        )
        .unwrap();
        let mut stream = generate_stream(&drift_spec(0, 100)).unwrap();
        let d = stream.take_dataset(200);
        for r in &d.rows {
            ensemble.learn_one(r);
        }
        // Uniform prediction proves no learning happened.
        assert_eq!(ensemble.predict_proba_one(&d.rows[0]), vec![0.5, 0.5]);
    }
}
