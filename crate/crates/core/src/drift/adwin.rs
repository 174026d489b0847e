//! ADWIN: adaptive windowing over an exponential histogram.

use std::collections::VecDeque;

use super::{DriftDetector, DriftError, DriftStatus};

#[derive(Debug, Clone, Copy)]
struct Bucket {
    sum: f64,
    count: u64,
}

/// Adaptive-window drift detector. Values (bounded to a known range,
/// default [0,1]) are appended as unit buckets; rows of the exponential
/// histogram hold at most `M` buckets of equal count, merging pairwise into
/// the next row on overflow, so sums stay exact at logarithmic storage.
///
/// Every update scans the admissible cuts between an older sub-window `W1`
/// and a newer `W2`; a cut fires when `|mean(W1) - mean(W2)| >= eps_cut`
/// with `eps_cut = sqrt(ln(4/delta') / (2m))`, `m = 1/(1/n1 + 1/n2)` and
/// `delta' = delta / width`. On a cut the oldest bucket is dropped and the
/// scan repeats until no cut fires.
#[derive(Debug, Clone)]
pub struct Adwin {
    delta: f64,
    max_buckets_per_row: usize,
    lo: f64,
    hi: f64,
    /// rows[i] holds buckets of count 2^i, oldest at the front.
    rows: Vec<VecDeque<Bucket>>,
    total: f64,
    width: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Adwin::new(0.002)
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        Adwin::with_range(delta, 0.0, 1.0)
    }

    /// Detector for values in `[lo, hi]`; inputs are rescaled to [0,1]
    /// so the cut bound applies unchanged.
    pub fn with_range(delta: f64, lo: f64, hi: f64) -> Self {
        assert!(delta > 0.0 && delta < 1.0, "delta must be in (0,1)");
        assert!(hi > lo, "range must be non-degenerate");
        Adwin {
            delta,
            max_buckets_per_row: 5,
            lo,
            hi,
            rows: vec![VecDeque::new()],
            total: 0.0,
            width: 0,
        }
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    /// Mean of the retained window in original units.
    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.lo + (self.total / self.width as f64) * (self.hi - self.lo)
        }
    }

    fn compress(&mut self) {
        let mut row = 0;
        while row < self.rows.len() {
            if self.rows[row].len() > self.max_buckets_per_row {
                let a = self.rows[row].pop_front().expect("bucket");
                let b = self.rows[row].pop_front().expect("bucket");
                if row + 1 == self.rows.len() {
                    self.rows.push(VecDeque::new());
                }
                self.rows[row + 1].push_back(Bucket {
                    sum: a.sum + b.sum,
                    count: a.count + b.count,
                });
            }
            row += 1;
        }
    }

    /// Buckets oldest-to-newest.
    fn flat_buckets(&self) -> Vec<Bucket> {
        let mut out = Vec::new();
        for row in self.rows.iter().rev() {
            out.extend(row.iter().copied());
        }
        out
    }

    fn drop_oldest_bucket(&mut self) {
        for row in self.rows.iter_mut().rev() {
            if let Some(b) = row.pop_front() {
                self.total -= b.sum;
                self.width -= b.count;
                return;
            }
        }
    }

    /// True if some admissible cut separates sub-windows with significantly
    /// different means.
    fn find_cut(&self) -> bool {
        if self.width < 2 {
            return false;
        }
        let delta_prime = self.delta / self.width as f64;
        let log_term = (4.0 / delta_prime).ln();
        let buckets = self.flat_buckets();
        let mut n1 = 0u64;
        let mut s1 = 0.0f64;
        for b in &buckets[..buckets.len() - 1] {
            n1 += b.count;
            s1 += b.sum;
            let n2 = self.width - n1;
            let s2 = self.total - s1;
            let m = 1.0 / (1.0 / n1 as f64 + 1.0 / n2 as f64);
            let eps_cut = (log_term / (2.0 * m)).sqrt();
            if (s1 / n1 as f64 - s2 / n2 as f64).abs() >= eps_cut {
                return true;
            }
        }
        false
    }
}

impl DriftDetector for Adwin {
    fn update(&mut self, value: f64) -> Result<DriftStatus, DriftError> {
        if !value.is_finite() || value < self.lo || value > self.hi {
            return Err(DriftError::OutOfRange(value));
        }
        let scaled = (value - self.lo) / (self.hi - self.lo);
        self.rows[0].push_back(Bucket {
            sum: scaled,
            count: 1,
        });
        self.total += scaled;
        self.width += 1;
        self.compress();

        let mut shrunk = false;
        while self.find_cut() {
            self.drop_oldest_bucket();
            shrunk = true;
        }
        Ok(if shrunk {
            DriftStatus::Drift
        } else {
            DriftStatus::Stable
        })
    }

    fn reset(&mut self) {
        *self = Adwin::with_range(self.delta, self.lo, self.hi);
    }
}
