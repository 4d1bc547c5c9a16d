//! Binomial confidence intervals and bound verdicts.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided 95% normal quantile.
pub fn z95() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| Normal::standard().inverse_cdf(0.975))
}

/// Wilson score interval for `events` successes in `trials`.
pub fn wilson_interval(events: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if events == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if events == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Wilson 95% interval.
pub fn wilson95(events: usize, trials: usize) -> (f64, f64) {
    wilson_interval(events, trials, z95())
}

/// Outcome of comparing an empirical frequency with a theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// Wilson upper limit at or below the bound.
    Satisfied,
    /// Wilson upper limit above the bound.
    Violated,
    /// Bound at or above one; nothing to check.
    Vacuous,
    /// No events, but the bound is below the Wilson upper limit of a
    /// zero-event run, so this trial count cannot confirm it.
    BelowResolution,
    /// The row carries no bound.
    NotApplicable,
}

impl BoundStatus {
    pub fn judge(bound: Option<f64>, events: usize, trials: usize) -> Self {
        let Some(bound) = bound else {
            return BoundStatus::NotApplicable;
        };
        if bound >= 1.0 {
            return BoundStatus::Vacuous;
        }
        let (_, upper) = wilson95(events, trials);
        if upper <= bound {
            BoundStatus::Satisfied
        } else if events == 0 {
            BoundStatus::BelowResolution
        } else {
            BoundStatus::Violated
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_event_upper_limit() {
        let (lo, hi) = wilson95(0, 2000);
        assert_eq!(lo, 0.0);
        assert_abs_diff_eq!(hi, 0.001917, epsilon = 1e-6);
        for n in [1, 7, 10, 2000] {
            assert_eq!(wilson95(0, n).0, 0.0);
            assert_eq!(wilson95(n, n).1, 1.0);
        }
        assert_abs_diff_eq!(z95(), 1.959963984540054, epsilon = 1e-9);
    }

    #[test]
    fn interval_brackets_estimate() {
        for (k, n) in [(1, 10), (5, 10), (10, 10), (37, 500)] {
            let (lo, hi) = wilson95(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
        // reference value for 5 / 10
        let (lo, hi) = wilson95(5, 10);
        assert_abs_diff_eq!(lo, 0.236593, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.763407, epsilon = 1e-6);
    }

    #[test]
    fn verdicts() {
        assert_eq!(BoundStatus::judge(None, 0, 10), BoundStatus::NotApplicable);
        assert_eq!(BoundStatus::judge(Some(1.0), 10, 10), BoundStatus::Vacuous);
        assert_eq!(
            BoundStatus::judge(Some(0.01), 0, 2000),
            BoundStatus::Satisfied
        );
        assert_eq!(
            BoundStatus::judge(Some(0.001), 0, 2000),
            BoundStatus::BelowResolution
        );
        assert_eq!(
            BoundStatus::judge(Some(0.001), 5, 2000),
            BoundStatus::Violated
        );
    }
}
