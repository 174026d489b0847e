//! Distribution-distance drift detection over a frozen reference window and
//! a sliding current window, plus the entropy / IE / KL primitives.

use std::collections::VecDeque;

use super::{DriftDetector, DriftError, DriftStatus};

/// Shannon entropy in bits; `0 * log 0` is taken as 0. The input must be a
/// normalized probability vector.
pub fn entropy(p: &[f64]) -> Result<f64, DriftError> {
    check_normalized(p)?;
    Ok(p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum())
}

/// Information-entropy distance `|H(p) - H(q)|`.
pub fn ie_distance(p: &[f64], q: &[f64]) -> Result<f64, DriftError> {
    if p.len() != q.len() {
        return Err(DriftError::LengthMismatch(p.len(), q.len()));
    }
    Ok((entropy(p)? - entropy(q)?).abs())
}

const KL_SMOOTHING: f64 = 1e-6;

/// KL divergence `D(p || q)` in bits. `q` is add-epsilon smoothed and
/// renormalized so every bin has positive mass.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, DriftError> {
    if p.len() != q.len() {
        return Err(DriftError::LengthMismatch(p.len(), q.len()));
    }
    check_normalized(p)?;
    check_normalized(q)?;
    let smooth_total: f64 = q.iter().map(|x| x + KL_SMOOTHING).sum();
    Ok(p.iter()
        .zip(q.iter())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| {
            let qs = (qi + KL_SMOOTHING) / smooth_total;
            pi * (pi / qs).log2()
        })
        .sum())
}

fn check_normalized(p: &[f64]) -> Result<(), DriftError> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DriftError::Unnormalized(sum));
    }
    Ok(())
}

/// Distance metric for [`WindowPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    Ie,
    Kl,
}

/// Windowed distribution-pair detector: a reference histogram frozen after a
/// warm-up of `window_size` values, compared against a sliding current
/// window of the same size. Drift fires when the configured distance exceeds
/// `threshold`; the reference is then re-frozen from the current window.
///
/// Values outside the configured range are clamped into the edge bins and
/// counted in [`WindowPair::clamped`].
#[derive(Debug, Clone)]
pub struct WindowPair {
    metric: DistanceMetric,
    threshold: f64,
    n_bins: usize,
    lo: f64,
    hi: f64,
    window_size: usize,
    reference: Vec<u64>,
    reference_total: usize,
    current: VecDeque<f64>,
    clamped: u64,
}

impl WindowPair {
    pub fn new(
        metric: DistanceMetric,
        threshold: f64,
        n_bins: usize,
        lo: f64,
        hi: f64,
        window_size: usize,
    ) -> Self {
        assert!(n_bins >= 2, "need at least 2 bins");
        assert!(hi > lo, "range must be non-degenerate");
        assert!(window_size >= 1);
        WindowPair {
            metric,
            threshold,
            n_bins,
            lo,
            hi,
            window_size,
            reference: vec![0; n_bins],
            reference_total: 0,
            current: VecDeque::with_capacity(window_size),
            clamped: 0,
        }
    }

    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    fn bin_of(&mut self, value: f64) -> usize {
        let clamped = value.clamp(self.lo, self.hi);
        if clamped != value {
            self.clamped += 1;
        }
        let t = (clamped - self.lo) / (self.hi - self.lo);
        ((t * self.n_bins as f64) as usize).min(self.n_bins - 1)
    }

    fn histogram(&self, values: impl Iterator<Item = f64>) -> Vec<u64> {
        let mut h = vec![0u64; self.n_bins];
        for v in values {
            let t = (v - self.lo) / (self.hi - self.lo);
            let b = ((t * self.n_bins as f64) as usize).min(self.n_bins - 1);
            h[b] += 1;
        }
        h
    }

    fn normalize(h: &[u64]) -> Vec<f64> {
        let total: u64 = h.iter().sum();
        h.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Current distance between the (normalized) reference and current
    /// histograms, when both are populated.
    pub fn distance(&self) -> Option<f64> {
        if self.reference_total < self.window_size || self.current.len() < self.window_size {
            return None;
        }
        let p = Self::normalize(&self.reference);
        let cur = self.histogram(self.current.iter().copied());
        let q = Self::normalize(&cur);
        let d = match self.metric {
            DistanceMetric::Ie => ie_distance(&p, &q),
            DistanceMetric::Kl => kl_divergence(&p, &q),
        };
        Some(d.expect("histograms are normalized by construction"))
    }
}

impl DriftDetector for WindowPair {
    fn update(&mut self, value: f64) -> Result<DriftStatus, DriftError> {
        if !value.is_finite() {
            return Err(DriftError::OutOfRange(value));
        }
        if self.reference_total < self.window_size {
            let b = self.bin_of(value);
            self.reference[b] += 1;
            self.reference_total += 1;
            return Ok(DriftStatus::Stable);
        }
        let clamped = value.clamp(self.lo, self.hi);
        if clamped != value {
            self.clamped += 1;
        }
        if self.current.len() == self.window_size {
            self.current.pop_front();
        }
        self.current.push_back(clamped);
        if let Some(d) = self.distance() {
            if d > self.threshold {
                self.reference = self.histogram(self.current.iter().copied());
                self.reference_total = self.window_size;
                self.current.clear();
                return Ok(DriftStatus::Drift);
            }
        }
        Ok(DriftStatus::Stable)
    }

    fn reset(&mut self) {
        *self = WindowPair::new(
            self.metric,
            self.threshold,
            self.n_bins,
            self.lo,
            self.hi,
            self.window_size,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use rand::Rng;

    #[test]
    fn uniform_over_two_bins_is_one_bit() {
        assert!((entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_bins_contribute_nothing() {
        assert!((entropy(&[1.0, 0.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn self_distances_are_zero() {
        let p = [0.25, 0.25, 0.5];
        assert!(ie_distance(&p, &p).unwrap().abs() < 1e-12);
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-6);
    }

    #[test]
    fn kl_matches_term_by_term_evaluation() {
        let p = [0.9, 0.1];
        let q = [0.5, 0.5];
        // Same smoothing applied by hand.
        let total = 1.0 + 2.0 * 1e-6;
        let q0 = (0.5 + 1e-6) / total;
        let q1 = (0.5 + 1e-6) / total;
        let expected = 0.9 * (0.9f64 / q0).log2() + 0.1 * (0.1f64 / q1).log2();
        let got = kl_divergence(&p, &q).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        assert!(matches!(
            entropy(&[0.5, 0.6]),
            Err(DriftError::Unnormalized(_))
        ));
        assert!(matches!(
            kl_divergence(&[0.5, 0.5], &[0.7, 0.7]),
            Err(DriftError::Unnormalized(_))
        ));
    }

    #[test]
    fn kl_is_nonnegative_on_random_distributions() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let mut p: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let mut q: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let ps: f64 = p.iter().sum();
            let qs: f64 = q.iter().sum();
            p.iter_mut().for_each(|x| *x /= ps);
            q.iter_mut().for_each(|x| *x /= qs);
            assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
            assert!(
                (ie_distance(&p, &q).unwrap() - ie_distance(&q, &p).unwrap()).abs() < 1e-12
            );
        }
    }

    #[test]
    fn matching_distribution_stays_stable() {
        let mut pair = WindowPair::new(DistanceMetric::Kl, 0.25, 10, 0.0, 1.0, 200);
        let mut rng = rng_from_seed(2);
        for _ in 0..3000 {
            let v = rng.gen::<f64>();
            assert_eq!(pair.update(v).unwrap(), DriftStatus::Stable);
        }
    }

    #[test]
    fn disjoint_support_swap_fires_on_first_full_window() {
        let mut pair = WindowPair::new(DistanceMetric::Kl, 1.0, 10, 0.0, 1.0, 100);
        for _ in 0..100 {
            pair.update(0.15).unwrap();
        }
        let mut fired_at = None;
        for i in 0..300 {
            if pair.update(0.85).unwrap() == DriftStatus::Drift {
                fired_at = Some(i);
                break;
            }
        }
        // The current window is entirely post-swap exactly when it fills.
        assert_eq!(fired_at, Some(99));
    }

    #[test]
    fn infinite_threshold_never_drifts() {
        let mut pair = WindowPair::new(DistanceMetric::Ie, f64::INFINITY, 10, 0.0, 1.0, 50);
        let mut rng = rng_from_seed(3);
        for i in 0..2000 {
            let v = if i < 1000 { rng.gen::<f64>() * 0.3 } else { 0.9 };
            assert_eq!(pair.update(v).unwrap(), DriftStatus::Stable);
        }
    }

    #[test]
    fn out_of_range_values_clamp_and_count() {
        let mut pair = WindowPair::new(DistanceMetric::Ie, 1.0, 4, 0.0, 1.0, 10);
        pair.update(5.0).unwrap();
        pair.update(-2.0).unwrap();
        assert_eq!(pair.clamped(), 2);
        assert!(matches!(
            pair.update(f64::NAN),
            Err(DriftError::OutOfRange(_))
        ));
    }
}
