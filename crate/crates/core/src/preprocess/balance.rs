//! SMOTE class balancing.
//!
//! New minority samples interpolate between an existing minority point and
//! one of its k nearest minority neighbors (Euclidean over numeric
//! features): `x_new = x + u * (x_i - x)`, `u ~ Uniform(0,1)`. Categorical
//! values are copied from the seed point. Balancing triggers only when the
//! minority/majority count ratio falls below the policy threshold, and
//! equalizes every class count to the majority count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::data::{ColumnKind, Dataset, Instance, Value};
use crate::seeding::rng_from_seed;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalancePolicy {
    /// Balance when minority/majority < trigger_ratio; in (0, 1].
    pub trigger_ratio: f64,
    pub smote_k: usize,
    pub seed: u64,
}

impl Default for BalancePolicy {
    fn default() -> Self {
        BalancePolicy {
            trigger_ratio: 0.5,
            smote_k: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub applied: bool,
    pub ratio_before: f64,
    pub ratio_after: f64,
    pub counts_before: Vec<usize>,
    pub counts_after: Vec<usize>,
    pub synthesized: usize,
    /// True when k had to be clamped to minority-class size minus one.
    pub k_clamped: bool,
}

/// Linear interpolation of Eq.-style SMOTE: numeric features blend, the
/// seed point's categorical values and label carry over.
pub(crate) fn interpolate(
    seed_point: &Instance,
    neighbor: &Instance,
    numeric_cols: &[usize],
    u: f64,
) -> Instance {
    let mut out = seed_point.clone();
    for &ci in numeric_cols {
        if let (Value::Num(a), Value::Num(b)) = (seed_point.values[ci], neighbor.values[ci]) {
            out.values[ci] = Value::Num(a + u * (b - a));
        }
    }
    out.weight = 1.0;
    out
}

fn squared_distance(a: &Instance, b: &Instance, numeric_cols: &[usize]) -> f64 {
    numeric_cols
        .iter()
        .map(|&ci| match (a.values[ci], b.values[ci]) {
            (Value::Num(x), Value::Num(y)) => (x - y) * (x - y),
            _ => 0.0,
        })
        .sum()
}

/// Balance `d` by SMOTE when the minority/majority ratio is below the
/// trigger. All original rows are preserved; synthetic rows are appended.
pub fn smote_balance(
    d: &Dataset,
    policy: &BalancePolicy,
) -> Result<(Dataset, BalanceReport), PreprocessError> {
    if !(0.0..=1.0).contains(&policy.trigger_ratio) || policy.trigger_ratio == 0.0 {
        return Err(PreprocessError::InvalidPolicy(format!(
            "trigger_ratio {} outside (0,1]",
            policy.trigger_ratio
        )));
    }
    if policy.smote_k == 0 {
        return Err(PreprocessError::InvalidPolicy(
            "smote_k must be >= 1".to_string(),
        ));
    }
    if !d.is_labeled() {
        return Err(PreprocessError::Unlabeled);
    }

    let counts = d.class_counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    let minority = counts
        .iter()
        .copied()
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    let ratio_before = if majority == 0 {
        1.0
    } else {
        minority as f64 / majority as f64
    };

    if ratio_before >= policy.trigger_ratio {
        return Ok((
            d.clone(),
            BalanceReport {
                applied: false,
                ratio_before,
                ratio_after: ratio_before,
                counts_before: counts.clone(),
                counts_after: counts,
                synthesized: 0,
                k_clamped: false,
            },
        ));
    }

    let numeric_cols: Vec<usize> = d
        .schema
        .feature_indices()
        .into_iter()
        .filter(|&ci| d.schema.columns[ci].kind == ColumnKind::Numeric)
        .collect();
    for &ci in &numeric_cols {
        if d.rows.iter().any(|r| r.values[ci].is_missing()) {
            return Err(PreprocessError::InvalidPolicy(format!(
                "column '{}' has missing cells; impute before balancing",
                d.schema.columns[ci].name
            )));
        }
    }

    let mut out = d.clone();
    let mut rng = rng_from_seed(policy.seed);
    let mut synthesized = 0usize;
    let mut k_clamped = false;

    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == majority {
            continue;
        }
        if count < 2 {
            return Err(PreprocessError::MinorityTooSmall {
                class: d
                    .schema
                    .class_labels
                    .get(class)
                    .cloned()
                    .unwrap_or_else(|| class.to_string()),
                count,
            });
        }
        let members: Vec<usize> = d
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == Some(class as u32))
            .map(|(i, _)| i)
            .collect();
        let k = policy.smote_k.min(count - 1);
        if k < policy.smote_k {
            k_clamped = true;
        }

        // k nearest same-class neighbors per member; distance ties break by
        // row index for determinism.
        let neighbor_lists: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut dists: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (squared_distance(&d.rows[i], &d.rows[j], &numeric_cols), j))
                    .collect();
                dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
                dists.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();

        for _ in 0..(majority - count) {
            let pick = rng.gen_range(0..members.len());
            let seed_row = members[pick];
            let neighbors = &neighbor_lists[pick];
            let neighbor_row = neighbors[rng.gen_range(0..neighbors.len())];
            let u: f64 = rng.gen();
            let synth = interpolate(&d.rows[seed_row], &d.rows[neighbor_row], &numeric_cols, u);
            out.rows.push(synth);
            synthesized += 1;
        }
    }

    let counts_after = out.class_counts();
    let majority_after = counts_after.iter().copied().max().unwrap_or(0);
    let minority_after = counts_after
        .iter()
        .copied()
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    Ok((
        out,
        BalanceReport {
            applied: true,
            ratio_before,
            ratio_after: if majority_after == 0 {
                1.0
            } else {
                minority_after as f64 / majority_after as f64
            },
            counts_before: counts,
            counts_after,
            synthesized,
            k_clamped,
        },
    ))
}
