//! Tree-structured Parzen estimator suggestion.
//!
//! Completed trials split at the gamma-quantile of losses into good and bad
//! sets, modeled by per-dimension densities l(x) and g(x): Gaussian Parzen
//! mixtures for continuous dimensions (integers likewise, then rounded),
//! smoothed empirical frequencies for categorical ones. Candidates are
//! drawn from l and the one maximizing l(x)/g(x) is suggested.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    finish, run_trial, CashError, Config, ParamKind, ParamSpec, ParamValue, Scale, SearchSpace,
    Trial, TrialHistory,
};
use crate::seeding::{derive_seed_indexed, rng_from_seed};

#[derive(Debug, Clone)]
pub struct TpeParams {
    /// Quantile of losses below which trials count as good.
    pub gamma: f64,
    /// Random trials before the estimator engages.
    pub n_startup: usize,
    /// Candidates drawn from l(x) per suggestion.
    pub n_candidates: usize,
}

impl Default for TpeParams {
    fn default() -> Self {
        TpeParams {
            gamma: 0.25,
            n_startup: 10,
            n_candidates: 24,
        }
    }
}

/// One-dimensional density over a parameter, fit to observed values.
enum Density {
    /// Gaussian mixture (possibly in log space) plus one uniform prior
    /// component over the range.
    Parzen {
        centers: Vec<f64>,
        bandwidths: Vec<f64>,
        lo: f64,
        hi: f64,
        log_space: bool,
    },
    /// Add-one smoothed categorical frequencies.
    Frequencies { probs: Vec<f64>, choices: Vec<String> },
}

impl Density {
    fn fit(spec: &ParamSpec, values: &[&ParamValue]) -> Density {
        match &spec.kind {
            ParamKind::Categorical { choices } => {
                let mut counts = vec![1.0f64; choices.len()];
                for v in values {
                    if let Some(c) = v.as_str() {
                        if let Some(i) = choices.iter().position(|x| x == c) {
                            counts[i] += 1.0;
                        }
                    }
                }
                let total: f64 = counts.iter().sum();
                Density::Frequencies {
                    probs: counts.into_iter().map(|c| c / total).collect(),
                    choices: choices.clone(),
                }
            }
            ParamKind::Continuous { lo, hi, scale } => {
                let log_space = *scale == Scale::Log;
                let map = |x: f64| if log_space { x.ln() } else { x };
                let (lo, hi) = (map(*lo), map(*hi));
                let centers: Vec<f64> =
                    values.iter().filter_map(|v| v.as_f64()).map(map).collect();
                let bandwidths = Self::bandwidths(&centers, hi - lo);
                Density::Parzen {
                    centers,
                    bandwidths,
                    lo,
                    hi,
                    log_space,
                }
            }
            ParamKind::Integer { lo, hi } => {
                let centers: Vec<f64> = values.iter().filter_map(|v| v.as_f64()).collect();
                let range = (*hi - *lo) as f64;
                let bandwidths = Self::bandwidths(&centers, range);
                Density::Parzen {
                    centers,
                    bandwidths,
                    lo: *lo as f64,
                    hi: *hi as f64,
                    log_space: false,
                }
            }
        }
    }

    /// Per-point bandwidth: max(distance to nearest other point, 1% of the
    /// range).
    fn bandwidths(centers: &[f64], range: f64) -> Vec<f64> {
        let floor = (0.01 * range).max(1e-12);
        centers
            .iter()
            .map(|&c| {
                let nearest = centers
                    .iter()
                    .filter(|&&o| o != c)
                    .map(|&o| (o - c).abs())
                    .fold(f64::INFINITY, f64::min);
                if nearest.is_finite() {
                    nearest.max(floor)
                } else {
                    floor
                }
            })
            .collect()
    }

    fn sample(&self, spec: &ParamSpec, rng: &mut ChaCha8Rng) -> ParamValue {
        match self {
            Density::Frequencies { probs, choices } => {
                let mut u: f64 = rng.gen();
                for (p, c) in probs.iter().zip(choices.iter()) {
                    if u < *p {
                        return ParamValue::Cat(c.clone());
                    }
                    u -= p;
                }
                ParamValue::Cat(choices.last().expect("non-empty").clone())
            }
            Density::Parzen {
                centers,
                bandwidths,
                lo,
                hi,
                log_space,
            } => {
                // Components plus one uniform prior, equally weighted.
                let k = centers.len();
                let pick = rng.gen_range(0..=k);
                let x = if pick == k {
                    rng.gen_range(*lo..=*hi)
                } else {
                    let (u1, u2) = (rng.gen::<f64>(), rng.gen::<f64>());
                    let z =
                        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    (centers[pick] + z * bandwidths[pick]).clamp(*lo, *hi)
                };
                match &spec.kind {
                    ParamKind::Integer { lo, hi } => {
                        ParamValue::Int((x.round() as i64).clamp(*lo, *hi))
                    }
                    _ => {
                        let v = if *log_space { x.exp() } else { x };
                        ParamValue::Float(v)
                    }
                }
            }
        }
    }

    fn log_density(&self, value: &ParamValue) -> f64 {
        match self {
            Density::Frequencies { probs, choices } => value
                .as_str()
                .and_then(|c| choices.iter().position(|x| x == c))
                .map_or(f64::NEG_INFINITY, |i| probs[i].ln()),
            Density::Parzen {
                centers,
                bandwidths,
                lo,
                hi,
                log_space,
            } => {
                let Some(raw) = value.as_f64() else {
                    return f64::NEG_INFINITY;
                };
                let x = if *log_space { raw.ln() } else { raw };
                let prior = 1.0 / (hi - lo).max(1e-12);
                let mut total = prior;
                for (&c, &b) in centers.iter().zip(bandwidths.iter()) {
                    let z = (x - c) / b;
                    total += (-0.5 * z * z).exp() / (b * std::f64::consts::TAU.sqrt());
                }
                (total / (centers.len() + 1) as f64).ln()
            }
        }
    }
}

fn split_good_bad(history: &TrialHistory, gamma: f64) -> (Vec<&Trial>, Vec<&Trial>) {
    let mut order: Vec<usize> = (0..history.trials.len()).collect();
    order.sort_by(|&a, &b| {
        history.trials[a]
            .loss
            .partial_cmp(&history.trials[b].loss)
            .expect("losses comparable")
            .then(a.cmp(&b))
    });
    let n = order.len();
    let n_good = ((gamma * n as f64).ceil() as usize).clamp(1, n.saturating_sub(1).max(1));
    let good: Vec<&Trial> = order[..n_good].iter().map(|&i| &history.trials[i]).collect();
    let bad: Vec<&Trial> = order[n_good..].iter().map(|&i| &history.trials[i]).collect();
    (good, bad)
}

/// Candidate configs with their summed log density ratio `ln l(x) - ln g(x)`
/// (introspection surface; `tpe_suggest` returns the argmax).
pub fn tpe_candidate_scores(
    history: &TrialHistory,
    space: &SearchSpace,
    params: &TpeParams,
    seed: u64,
) -> Result<Vec<(Config, f64)>, CashError> {
    if space.is_empty() {
        return Err(CashError::EmptySpace);
    }
    space.validate()?;
    let mut rng = rng_from_seed(seed);
    let (good, bad) = split_good_bad(history, params.gamma);

    let mut candidates = Vec::with_capacity(params.n_candidates);
    for _ in 0..params.n_candidates {
        let mut config = Config::new();
        let mut score = 0.0f64;
        for spec in &space.params {
            if !space.is_active(spec, &config) {
                continue;
            }
            let good_vals: Vec<&ParamValue> =
                good.iter().filter_map(|t| t.config.get(&spec.name)).collect();
            let bad_vals: Vec<&ParamValue> =
                bad.iter().filter_map(|t| t.config.get(&spec.name)).collect();
            let l = Density::fit(spec, &good_vals);
            let g = Density::fit(spec, &bad_vals);
            let value = l.sample(spec, &mut rng);
            score += l.log_density(&value) - g.log_density(&value);
            config.insert(spec.name.clone(), value);
        }
        candidates.push((config, score));
    }
    Ok(candidates)
}

/// Suggest the next config: a random draw until `n_startup` trials exist,
/// then the candidate maximizing l(x)/g(x).
pub fn tpe_suggest(
    history: &TrialHistory,
    space: &SearchSpace,
    params: &TpeParams,
    seed: u64,
) -> Result<Config, CashError> {
    if space.is_empty() {
        return Err(CashError::EmptySpace);
    }
    space.validate()?;
    if history.trials.len() < params.n_startup {
        let mut rng = rng_from_seed(seed);
        return Ok(space.sample(&mut rng));
    }
    let scored = tpe_candidate_scores(history, space, params, seed)?;
    Ok(scored
        .into_iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("scores comparable"))
        .expect("n_candidates >= 1")
        .0)
}

/// Sequential TPE optimization; `initial` configs (e.g. the default config)
/// are evaluated first and count toward the budget.
pub fn tpe_search(
    space: &SearchSpace,
    mut objective: impl FnMut(&Config) -> Result<f64, String>,
    max_evals: usize,
    seed: u64,
    params: &TpeParams,
    initial: Vec<Config>,
) -> Result<(Trial, TrialHistory), CashError> {
    if space.is_empty() {
        return Err(CashError::EmptySpace);
    }
    space.validate()?;
    let mut history = TrialHistory::new(params.gamma);
    for config in initial.into_iter().take(max_evals) {
        space.validate_config(&config)?;
        run_trial(&mut history, "tpe", &config, &mut objective);
    }
    while history.trials.len() < max_evals {
        let step_seed = derive_seed_indexed(seed, "tpe-step", history.trials.len() as u64);
        let config = tpe_suggest(&history, space, params, step_seed)?;
        run_trial(&mut history, "tpe", &config, &mut objective);
    }
    finish(history)
}
