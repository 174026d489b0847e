//! Error-rate drift detectors: DDM and EDDM.

use super::{DriftDetector, DriftError, DriftStatus};

/// Drift Detection Method: tracks the running error rate `p` and its
/// binomial standard deviation `s = sqrt(p(1-p)/n)`, remembering the
/// minimum of `p + s`. Warning fires at `p + s >= p_min + 2 s_min`,
/// drift at `p + s >= p_min + 3 s_min`, after which the state resets.
#[derive(Debug, Clone)]
pub struct Ddm {
    min_instances: usize,
    n: usize,
    p: f64,
    p_min: f64,
    s_min: f64,
}

impl Default for Ddm {
    fn default() -> Self {
        Ddm::new(30)
    }
}

impl Ddm {
    pub fn new(min_instances: usize) -> Self {
        Ddm {
            min_instances,
            n: 0,
            p: 0.0,
            p_min: f64::INFINITY,
            s_min: f64::INFINITY,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn error_rate(&self) -> f64 {
        self.p
    }

    /// Binomial stdev of the current error-rate estimate.
    pub fn stdev(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.p * (1.0 - self.p) / self.n as f64).sqrt()
        }
    }
}

impl DriftDetector for Ddm {
    fn update(&mut self, error: f64) -> Result<DriftStatus, DriftError> {
        if error != 0.0 && error != 1.0 {
            return Err(DriftError::NonBinaryInput(error));
        }
        self.n += 1;
        self.p += (error - self.p) / self.n as f64;
        let s = self.stdev();
        if self.n < self.min_instances {
            return Ok(DriftStatus::Stable);
        }
        if self.p + s < self.p_min + self.s_min {
            self.p_min = self.p;
            self.s_min = s;
        }
        if self.p + s >= self.p_min + 3.0 * self.s_min {
            self.reset();
            return Ok(DriftStatus::Drift);
        }
        if self.p + s >= self.p_min + 2.0 * self.s_min {
            return Ok(DriftStatus::Warning);
        }
        Ok(DriftStatus::Stable)
    }

    fn reset(&mut self) {
        *self = Ddm::new(self.min_instances);
    }
}

/// Early Drift Detection Method: tracks the mean and stdev of the distances
/// (instance gaps) between consecutive errors. With `q = mu + 2 sigma` and
/// `q_max` its running maximum, warning fires when `q / q_max < alpha_warn`
/// and drift when `q / q_max < beta_drift`. Inert until 30 errors observed.
#[derive(Debug, Clone)]
pub struct Eddm {
    alpha_warn: f64,
    beta_drift: f64,
    warmup_errors: usize,
    tick: usize,
    last_error_at: Option<usize>,
    n_errors: usize,
    gap_mean: f64,
    gap_m2: f64,
    q_max: f64,
}

impl Default for Eddm {
    fn default() -> Self {
        Eddm::new(0.95, 0.9, 30)
    }
}

impl Eddm {
    pub fn new(alpha_warn: f64, beta_drift: f64, warmup_errors: usize) -> Self {
        Eddm {
            alpha_warn,
            beta_drift,
            warmup_errors,
            tick: 0,
            last_error_at: None,
            n_errors: 0,
            gap_mean: 0.0,
            gap_m2: 0.0,
            q_max: 0.0,
        }
    }

    fn gap_stdev(&self) -> f64 {
        if self.n_errors < 2 {
            0.0
        } else {
            (self.gap_m2 / (self.n_errors - 1) as f64).sqrt()
        }
    }
}

impl DriftDetector for Eddm {
    fn update(&mut self, error: f64) -> Result<DriftStatus, DriftError> {
        if error != 0.0 && error != 1.0 {
            return Err(DriftError::NonBinaryInput(error));
        }
        self.tick += 1;
        if error != 1.0 {
            return Ok(DriftStatus::Stable);
        }
        if let Some(prev) = self.last_error_at {
            let gap = (self.tick - prev) as f64;
            self.n_errors += 1;
            let delta = gap - self.gap_mean;
            self.gap_mean += delta / self.n_errors as f64;
            self.gap_m2 += delta * (gap - self.gap_mean);
        }
        self.last_error_at = Some(self.tick);
        if self.n_errors < self.warmup_errors {
            return Ok(DriftStatus::Stable);
        }
        let q = self.gap_mean + 2.0 * self.gap_stdev();
        if q > self.q_max {
            self.q_max = q;
        }
        let ratio = if self.q_max > 0.0 { q / self.q_max } else { 1.0 };
        if ratio < self.beta_drift {
            let (a, b, w) = (self.alpha_warn, self.beta_drift, self.warmup_errors);
            *self = Eddm::new(a, b, w);
            return Ok(DriftStatus::Drift);
        }
        if ratio < self.alpha_warn {
            return Ok(DriftStatus::Warning);
        }
        Ok(DriftStatus::Stable)
    }

    fn reset(&mut self) {
        *self = Eddm::new(self.alpha_warn, self.beta_drift, self.warmup_errors);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use rand::Rng;

    #[test]
    fn binomial_stdev_matches_closed_form() {
        // min_instances above the stream length keeps thresholds inert.
        let mut d = Ddm::new(1000);
        // 50 errors + 50 correct -> p = 0.5, n = 100, s = sqrt(0.25/100) = 0.05
        for i in 0..100 {
            d.update(f64::from(i % 2)).unwrap();
        }
        assert!((d.error_rate() - 0.5).abs() < 1e-12);
        assert!((d.stdev() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn ddm_rejects_non_binary_input() {
        let mut d = Ddm::default();
        assert!(matches!(
            d.update(0.5),
            Err(DriftError::NonBinaryInput(_))
        ));
    }

    #[test]
    fn improving_error_stream_never_warns() {
        // Early errors then all-correct: p + s keeps setting new minima.
        let mut d = Ddm::default();
        let mut status_seen = Vec::new();
        for i in 0..2000usize {
            let error = f64::from(i < 25);
            status_seen.push(d.update(error).unwrap());
        }
        assert!(status_seen.iter().all(|s| *s == DriftStatus::Stable));
    }

    #[test]
    fn ddm_warning_precedes_drift_on_error_jump() {
        let mut successes = 0;
        for seed in 0..100u64 {
            let mut rng = rng_from_seed(seed);
            let mut d = Ddm::default();
            let mut saw_warning = false;
            let mut drift_delay = None;
            for t in 0..1400usize {
                let p = if t < 1000 { 0.1 } else { 0.5 };
                let e = f64::from(rng.gen::<f64>() < p);
                match d.update(e).unwrap() {
                    DriftStatus::Warning => saw_warning = true,
                    DriftStatus::Drift if t >= 1000 => {
                        drift_delay = Some(t - 1000);
                        break;
                    }
                    _ => {}
                }
            }
            if saw_warning && drift_delay.is_some_and(|d| d <= 200) {
                successes += 1;
            }
        }
        assert!(successes >= 95, "only {successes}/100 runs detected in time");
    }

    #[test]
    fn ddm_state_after_drift_equals_fresh_detector() {
        let mut d = Ddm::default();
        let mut rng = rng_from_seed(1);
        loop {
            let t = d.n();
            let p = if t < 500 { 0.05 } else { 0.6 };
            let e = f64::from(rng.gen::<f64>() < p);
            if d.update(e).unwrap() == DriftStatus::Drift {
                break;
            }
        }
        let fresh = Ddm::default();
        assert_eq!(d.n(), fresh.n());
        assert_eq!(d.error_rate(), fresh.error_rate());
    }

    #[test]
    fn ddm_status_is_a_pure_function_of_the_error_prefix() {
        let mut rng = rng_from_seed(9);
        let errors: Vec<f64> = (0..800).map(|_| f64::from(rng.gen::<f64>() < 0.3)).collect();
        let run = |errs: &[f64]| {
            let mut d = Ddm::default();
            errs.iter().map(|e| d.update(*e).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(&errors), run(&errors));
    }

    #[test]
    fn eddm_periodic_errors_stay_stable() {
        let mut d = Eddm::default();
        for i in 1..5000usize {
            let e = f64::from(i % 10 == 0);
            assert_eq!(d.update(e).unwrap(), DriftStatus::Stable, "at {i}");
        }
    }

    #[test]
    fn eddm_shrinking_gaps_fire_drift() {
        let mut d = Eddm::default();
        let mut fired = false;
        let mut saw_warning = false;
        // 60 errors spaced 50 apart, then errors spaced 5 apart.
        let mut schedule = Vec::new();
        for _ in 0..60 {
            schedule.extend(std::iter::repeat(0.0).take(49));
            schedule.push(1.0);
        }
        for _ in 0..200 {
            schedule.extend(std::iter::repeat(0.0).take(4));
            schedule.push(1.0);
        }
        for e in schedule {
            match d.update(e).unwrap() {
                DriftStatus::Drift => {
                    fired = true;
                    break;
                }
                DriftStatus::Warning => saw_warning = true,
                DriftStatus::Stable => {}
            }
        }
        assert!(fired, "drift never fired");
        assert!(saw_warning, "warning never fired");
    }

    #[test]
    fn eddm_no_errors_ever_stays_stable() {
        let mut d = Eddm::default();
        for _ in 0..10_000 {
            assert_eq!(d.update(0.0).unwrap(), DriftStatus::Stable);
        }
    }
}
