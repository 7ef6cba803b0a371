//! Monte Carlo error summaries.

use crate::math;

/// Standard error of the mean of a correlated series by non-overlapping batch means.
///
/// Falls back to the i.i.d. formula when there are too few values for two batches.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let b = batches.max(2);
    let size = n / b;
    if size < 1 {
        return math::sqrt(math::variance(xs) / n as f64);
    }
    let means: alloc::vec::Vec<f64> = xs.chunks_exact(size).take(b).map(math::mean).collect();
    math::sqrt(math::variance(&means) / means.len() as f64)
}

/// Standard error of the mean treating values as independent.
pub fn iid_se(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    math::sqrt(math::variance(xs) / xs.len() as f64)
}

/// Running acceptance tally.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Acceptance {
    pub proposed: u64,
    pub accepted: u64,
}

impl Acceptance {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}
