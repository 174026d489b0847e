//! Combined algorithm selection and hyperparameter optimization: mixed
//! continuous / integer / categorical (optionally conditional) search
//! spaces, grid / random / TPE optimizers, and the two-stage CASH driver.

mod driver;
mod tpe;

pub use driver::{
    adaptive_model_select, cash_optimize, CashCandidate, CashResult, FoldPrep, Metric, NoPrep,
    OptimizerKind, SelectionOutcome, Stage1Row, ValidTransform,
};
pub use tpe::{tpe_candidate_scores, tpe_search, tpe_suggest, TpeParams};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::rng_from_seed;

#[derive(Debug, Error)]
pub enum CashError {
    #[error("search space is empty")]
    EmptySpace,
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("all trials failed")]
    AllTrialsFailed,
    #[error("no candidates supplied")]
    NoCandidates,
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

/// A concrete hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Float(x) => Some(*x),
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Cat(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Cat(s) => Some(s),
            _ => None,
        }
    }
}

/// name -> value, ordered for deterministic serialization.
pub type Config = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Continuous { lo: f64, hi: f64, scale: Scale },
    Integer { lo: i64, hi: i64 },
    Categorical { choices: Vec<String> },
}

/// One dimension of a search space. A conditional parameter is active only
/// when its parent holds the given value; parents must be declared first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub parent: String,
    pub equals: ParamValue,
}

impl ParamSpec {
    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Continuous {
                lo,
                hi,
                scale: Scale::Linear,
            },
            condition: None,
        }
    }

    pub fn log_continuous(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Continuous {
                lo,
                hi,
                scale: Scale::Log,
            },
            condition: None,
        }
    }

    pub fn integer(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Integer { lo, hi },
            condition: None,
        }
    }

    pub fn categorical(name: impl Into<String>, choices: &[&str]) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Categorical {
                choices: choices.iter().map(|s| s.to_string()).collect(),
            },
            condition: None,
        }
    }

    pub fn when(mut self, parent: impl Into<String>, equals: ParamValue) -> Self {
        self.condition = Some(Condition {
            parent: parent.into(),
            equals,
        });
        self
    }

    fn in_bounds(&self, value: &ParamValue) -> bool {
        match (&self.kind, value) {
            (ParamKind::Continuous { lo, hi, .. }, v) => v
                .as_f64()
                .is_some_and(|x| x.is_finite() && x >= *lo && x <= *hi),
            (ParamKind::Integer { lo, hi }, ParamValue::Int(i)) => i >= lo && i <= hi,
            (ParamKind::Categorical { choices }, ParamValue::Cat(c)) => choices.contains(c),
            _ => false,
        }
    }
}

/// Ordered list of parameter specs; conditional parents precede children.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Self {
        SearchSpace { params }
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn validate(&self) -> Result<(), CashError> {
        for (i, p) in self.params.iter().enumerate() {
            if self.params[..i].iter().any(|o| o.name == p.name) {
                return Err(CashError::InvalidSpace(format!(
                    "duplicate parameter '{}'",
                    p.name
                )));
            }
            match &p.kind {
                ParamKind::Continuous { lo, hi, scale } => {
                    if !(lo < hi) {
                        return Err(CashError::InvalidSpace(format!(
                            "'{}': lo {lo} must be < hi {hi}",
                            p.name
                        )));
                    }
                    if *scale == Scale::Log && *lo <= 0.0 {
                        return Err(CashError::InvalidSpace(format!(
                            "'{}': log scale needs lo > 0",
                            p.name
                        )));
                    }
                }
                ParamKind::Integer { lo, hi } => {
                    if lo >= hi {
                        return Err(CashError::InvalidSpace(format!(
                            "'{}': lo {lo} must be < hi {hi}",
                            p.name
                        )));
                    }
                }
                ParamKind::Categorical { choices } => {
                    if choices.is_empty() {
                        return Err(CashError::InvalidSpace(format!(
                            "'{}': choices empty",
                            p.name
                        )));
                    }
                }
            }
            if let Some(cond) = &p.condition {
                let parent_pos = self.params[..i]
                    .iter()
                    .position(|o| o.name == cond.parent);
                if parent_pos.is_none() {
                    return Err(CashError::InvalidSpace(format!(
                        "'{}': conditional parent '{}' must be declared earlier",
                        p.name, cond.parent
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether a parameter is active under the given (partial) config.
    pub fn is_active(&self, spec: &ParamSpec, config: &Config) -> bool {
        match &spec.condition {
            None => true,
            Some(cond) => config.get(&cond.parent) == Some(&cond.equals),
        }
    }

    /// Draw a config uniformly at random: uniform over ranges (log-uniform
    /// on log scale), uniform over choices; inactive children omitted.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Config {
        let mut config = Config::new();
        for p in &self.params {
            if !self.is_active(p, &config) {
                continue;
            }
            let value = match &p.kind {
                ParamKind::Continuous { lo, hi, scale } => match scale {
                    Scale::Linear => ParamValue::Float(rng.gen_range(*lo..=*hi)),
                    Scale::Log => {
                        ParamValue::Float(rng.gen_range(lo.ln()..=hi.ln()).exp())
                    }
                },
                ParamKind::Integer { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
                ParamKind::Categorical { choices } => {
                    ParamValue::Cat(choices[rng.gen_range(0..choices.len())].clone())
                }
            };
            config.insert(p.name.clone(), value);
        }
        config
    }

    /// A config satisfies the space when every active parameter is present
    /// and in bounds, and no inactive or unknown parameter appears.
    pub fn validate_config(&self, config: &Config) -> Result<(), CashError> {
        let mut expected = Config::new();
        for p in &self.params {
            if self.is_active(p, config) {
                let v = config.get(&p.name).ok_or_else(|| {
                    CashError::InvalidConfig(format!("missing parameter '{}'", p.name))
                })?;
                if !p.in_bounds(v) {
                    return Err(CashError::InvalidConfig(format!(
                        "parameter '{}' value {:?} out of bounds",
                        p.name, v
                    )));
                }
                expected.insert(p.name.clone(), v.clone());
            }
        }
        for key in config.keys() {
            if !expected.contains_key(key) {
                return Err(CashError::InvalidConfig(format!(
                    "parameter '{key}' is inactive or unknown"
                )));
            }
        }
        Ok(())
    }

    /// Exhaustive enumeration in lexicographic order (first parameter most
    /// significant). Continuous dimensions take `resolution` evenly spaced
    /// points (log-evenly on log scale); integer dimensions enumerate fully.
    pub fn grid(&self, resolution: usize) -> Vec<Config> {
        let mut out = Vec::new();
        let mut partial = Config::new();
        self.grid_rec(0, resolution.max(2), &mut partial, &mut out);
        out
    }

    fn grid_rec(&self, idx: usize, res: usize, partial: &mut Config, out: &mut Vec<Config>) {
        if idx == self.params.len() {
            out.push(partial.clone());
            return;
        }
        let p = &self.params[idx];
        if !self.is_active(p, partial) {
            self.grid_rec(idx + 1, res, partial, out);
            return;
        }
        let values: Vec<ParamValue> = match &p.kind {
            ParamKind::Continuous { lo, hi, scale } => (0..res)
                .map(|i| {
                    let t = i as f64 / (res - 1) as f64;
                    ParamValue::Float(match scale {
                        Scale::Linear => lo + t * (hi - lo),
                        Scale::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                    })
                })
                .collect(),
            ParamKind::Integer { lo, hi } => (*lo..=*hi).map(ParamValue::Int).collect(),
            ParamKind::Categorical { choices } => {
                choices.iter().cloned().map(ParamValue::Cat).collect()
            }
        };
        for v in values {
            partial.insert(p.name.clone(), v);
            self.grid_rec(idx + 1, res, partial, out);
        }
        partial.remove(&p.name);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub algorithm: String,
    pub config: Config,
    /// Lower is better; failed trials carry +infinity.
    pub loss: f64,
    pub wall_time: f64,
    pub status: TrialStatus,
}

/// Trials in evaluation order plus the good/bad split quantile.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrialHistory {
    pub trials: Vec<Trial>,
    pub gamma: f64,
}

impl TrialHistory {
    pub fn new(gamma: f64) -> Self {
        TrialHistory {
            trials: Vec::new(),
            gamma,
        }
    }

    /// Minimum-loss trial; ties resolve to the earliest evaluation.
    pub fn best(&self) -> Option<&Trial> {
        self.trials
            .iter()
            .filter(|t| t.status == TrialStatus::Ok)
            .min_by(|a, b| a.loss.partial_cmp(&b.loss).expect("loss comparable"))
    }
}

/// Evaluate `objective` over the full grid, truncated at `max_evals`.
pub fn grid_search(
    space: &SearchSpace,
    mut objective: impl FnMut(&Config) -> Result<f64, String>,
    max_evals: usize,
    resolution: usize,
) -> Result<(Trial, TrialHistory), CashError> {
    if space.is_empty() {
        return Err(CashError::EmptySpace);
    }
    space.validate()?;
    let mut history = TrialHistory::new(0.25);
    for config in space.grid(resolution).into_iter().take(max_evals) {
        run_trial(&mut history, "grid", &config, &mut objective);
    }
    finish(history)
}

/// Evaluate `objective` on `max_evals` i.i.d. seeded draws.
pub fn random_search(
    space: &SearchSpace,
    mut objective: impl FnMut(&Config) -> Result<f64, String>,
    max_evals: usize,
    seed: u64,
) -> Result<(Trial, TrialHistory), CashError> {
    if space.is_empty() {
        return Err(CashError::EmptySpace);
    }
    space.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut history = TrialHistory::new(0.25);
    for _ in 0..max_evals {
        let config = space.sample(&mut rng);
        run_trial(&mut history, "random", &config, &mut objective);
    }
    finish(history)
}

pub(crate) fn run_trial(
    history: &mut TrialHistory,
    algorithm: &str,
    config: &Config,
    objective: &mut impl FnMut(&Config) -> Result<f64, String>,
) {
    let start = std::time::Instant::now();
    let (loss, status) = match objective(config) {
        Ok(loss) if loss.is_finite() => (loss, TrialStatus::Ok),
        Ok(_) | Err(_) => (f64::INFINITY, TrialStatus::Failed),
    };
    history.trials.push(Trial {
        algorithm: algorithm.to_string(),
        config: config.clone(),
        loss,
        wall_time: start.elapsed().as_secs_f64(),
        status,
    });
}

pub(crate) fn finish(history: TrialHistory) -> Result<(Trial, TrialHistory), CashError> {
    match history.best() {
        Some(best) => Ok((best.clone(), history)),
        None => Err(CashError::AllTrialsFailed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_space() -> SearchSpace {
        SearchSpace::new(vec![
            ParamSpec::categorical("detector", &["adwin", "ddm", "eddm"]),
            ParamSpec::integer("n_models", 3, 6),
        ])
    }

    #[test]
    fn grid_size_is_the_cartesian_product() {
        let grid = toy_space().grid(5);
        assert_eq!(grid.len(), 3 * 4);
        // Lexicographic: first param most significant.
        assert_eq!(grid[0]["detector"].as_str(), Some("adwin"));
        assert_eq!(grid[0]["n_models"].as_i64(), Some(3));
        assert_eq!(grid[1]["n_models"].as_i64(), Some(4));
        assert_eq!(grid[4]["detector"].as_str(), Some("ddm"));
    }

    #[test]
    fn grid_search_finds_discrete_minimum_exactly() {
        let space = toy_space();
        let objective = |c: &Config| -> Result<f64, String> {
            let d = c["detector"].as_str().unwrap();
            let n = c["n_models"].as_i64().unwrap() as f64;
            Ok(if d == "ddm" { 0.0 } else { 1.0 } + (n - 5.0).abs())
        };
        let (best, history) = grid_search(&space, objective, 100, 5).unwrap();
        assert_eq!(best.config["detector"].as_str(), Some("ddm"));
        assert_eq!(best.config["n_models"].as_i64(), Some(5));
        assert_eq!(history.trials.len(), 12);
        assert_eq!(best.loss, 0.0);
    }

    #[test]
    fn single_point_space_returns_its_only_trial() {
        let space = SearchSpace::new(vec![ParamSpec::categorical("only", &["x"])]);
        let (best, history) = grid_search(&space, |_| Ok(0.7), 10, 2).unwrap();
        assert_eq!(history.trials.len(), 1);
        assert_eq!(best.loss, 0.7);
    }

    #[test]
    fn grid_truncates_at_max_evals() {
        let (_, history) = grid_search(&toy_space(), |_| Ok(1.0), 5, 3).unwrap();
        assert_eq!(history.trials.len(), 5);
    }

    #[test]
    fn random_draws_stay_in_bounds() {
        let space = SearchSpace::new(vec![
            ParamSpec::continuous("x", -1.0, 2.0),
            ParamSpec::log_continuous("lr", 1e-4, 1.0),
            ParamSpec::integer("k", 1, 9),
            ParamSpec::categorical("c", &["a", "b"]),
        ]);
        let mut rng = rng_from_seed(0);
        for _ in 0..1000 {
            let config = space.sample(&mut rng);
            space.validate_config(&config).unwrap();
            let lr = config["lr"].as_f64().unwrap();
            assert!((1e-4..=1.0).contains(&lr));
        }
    }

    #[test]
    fn seeded_random_search_reruns_identically() {
        let space = toy_space();
        let obj = |c: &Config| Ok(c["n_models"].as_i64().unwrap() as f64);
        let (_, h1) = random_search(&space, obj, 30, 42).unwrap();
        let (_, h2) = random_search(&space, obj, 30, 42).unwrap();
        let cfgs1: Vec<&Config> = h1.trials.iter().map(|t| &t.config).collect();
        let cfgs2: Vec<&Config> = h2.trials.iter().map(|t| &t.config).collect();
        assert_eq!(cfgs1, cfgs2);
    }

    #[test]
    fn random_search_closes_on_continuous_target() {
        // loss = |x - 0.3| on [0,1]: 200 draws land within 0.01 of the
        // optimum with probability 1 - 0.98^200 per seed.
        let space = SearchSpace::new(vec![ParamSpec::continuous("x", 0.0, 1.0)]);
        let mut hits = 0;
        for seed in 0..50u64 {
            let (best, _) = random_search(
                &space,
                |c| Ok((c["x"].as_f64().unwrap() - 0.3).abs()),
                200,
                seed,
            )
            .unwrap();
            if best.loss < 0.01 {
                hits += 1;
            }
        }
        assert!(hits >= 48, "only {hits}/50 seeds found the target");
    }

    #[test]
    fn conditional_children_only_appear_when_active() {
        let space = SearchSpace::new(vec![
            ParamSpec::categorical("model", &["tree", "knn"]),
            ParamSpec::integer("depth", 1, 10)
                .when("model", ParamValue::Cat("tree".into())),
            ParamSpec::integer("k", 1, 15).when("model", ParamValue::Cat("knn".into())),
        ]);
        space.validate().unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let c = space.sample(&mut rng);
            space.validate_config(&c).unwrap();
            match c["model"].as_str().unwrap() {
                "tree" => {
                    assert!(c.contains_key("depth"));
                    assert!(!c.contains_key("k"));
                }
                "knn" => {
                    assert!(c.contains_key("k"));
                    assert!(!c.contains_key("depth"));
                }
                other => panic!("unexpected {other}"),
            }
        }
        // Grid enumerates both branches without inactive params.
        let grid = space.grid(2);
        assert_eq!(grid.len(), 10 + 15);
        for c in &grid {
            space.validate_config(c).unwrap();
        }
    }

    #[test]
    fn child_declared_before_parent_is_rejected() {
        let space = SearchSpace::new(vec![
            ParamSpec::integer("depth", 1, 10)
                .when("model", ParamValue::Cat("tree".into())),
            ParamSpec::categorical("model", &["tree"]),
        ]);
        assert!(matches!(space.validate(), Err(CashError::InvalidSpace(_))));
    }

    #[test]
    fn failed_trials_carry_infinite_loss() {
        let space = SearchSpace::new(vec![ParamSpec::integer("k", 1, 3)]);
        let (best, history) = grid_search(
            &space,
            |c| {
                let k = c["k"].as_i64().unwrap();
                if k == 2 {
                    Ok(0.1)
                } else {
                    Err("boom".into())
                }
            },
            10,
            2,
        )
        .unwrap();
        assert_eq!(best.config["k"].as_i64(), Some(2));
        assert_eq!(
            history
                .trials
                .iter()
                .filter(|t| t.status == TrialStatus::Failed)
                .count(),
            2
        );
        assert!(history.trials[0].loss.is_infinite());
    }

    #[test]
    fn optimizers_return_the_minimum_of_their_own_history() {
        let space = toy_space();
        let obj = |c: &Config| {
            Ok(c["n_models"].as_i64().unwrap() as f64 * 0.1
                + c["detector"].as_str().unwrap().len() as f64)
        };
        for (best, history) in [
            grid_search(&space, obj, 100, 2).unwrap(),
            random_search(&space, obj, 40, 9).unwrap(),
        ] {
            let min = history
                .trials
                .iter()
                .map(|t| t.loss)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(best.loss, min);
        }
    }

    #[test]
    fn table7_style_spaces_parse_and_sample() {
        // Online-learner rows: n_models in [3,20], detector in {ADWIN, DDM};
        // offline RF rows: integer ranges plus a categorical criterion.
        let arf = SearchSpace::new(vec![
            ParamSpec::integer("n_models", 3, 20),
            ParamSpec::categorical("drift_detector", &["adwin", "ddm"]),
        ]);
        let rf = SearchSpace::new(vec![
            ParamSpec::integer("n_estimators", 50, 500),
            ParamSpec::integer("max_depth", 5, 50),
            ParamSpec::integer("min_samples_split", 2, 11),
            ParamSpec::integer("min_samples_leaf", 1, 11),
            ParamSpec::categorical("criterion", &["gini", "entropy"]),
        ]);
        arf.validate().unwrap();
        rf.validate().unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            arf.validate_config(&arf.sample(&mut rng)).unwrap();
            rf.validate_config(&rf.sample(&mut rng)).unwrap();
        }
        // Reported optima load as plain configs (regression fixture only).
        let mut reported = Config::new();
        reported.insert("n_models".into(), ParamValue::Int(18));
        reported.insert("drift_detector".into(), ParamValue::Cat("ddm".into()));
        arf.validate_config(&reported).unwrap();
    }
}
