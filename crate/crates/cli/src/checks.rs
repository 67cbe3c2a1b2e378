//! Pass/fail checks attached to reports and used by `--check`.

use serde::{Deserialize, Serialize};

/// One-sided tail mass beyond 4 standard deviations of a normal variable.
pub const FOUR_SIGMA_TAIL: f64 = 3.167_124_183_311_992e-5;

/// Above this mean the Gaussian form `|c - E| <= 4 sqrt(E)` is used.
const GAUSSIAN_REGIME: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    /// `|value - expected| <= k * sigma`.
    pub fn within(name: &str, value: f64, expected: f64, sigma: f64, k: f64) -> Self {
        let z = (value - expected) / sigma;
        Check::new(
            name,
            z.abs() <= k,
            format!("value {value:.6e}, expected {expected:.6e}, z = {z:.3} (limit {k})"),
        )
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// `(P(X <= c), P(X >= c))` for `X ~ Poisson(mean)`, by direct summation.
fn poisson_tails(c: u64, mean: f64) -> (f64, f64) {
    let mut pmf = (-mean).exp();
    let mut below = 0.0;
    for k in 0..c {
        below += pmf;
        pmf *= mean / (k + 1) as f64;
    }
    // below = P(X <= c - 1), pmf = P(X = c)
    let le = (below + pmf).min(1.0);
    let ge = (1.0 - below).max(0.0);
    (le, ge)
}

/// Whether a bin count is inside the 4-sigma band of a Poisson law with the
/// given mean. Small means use exact equal-tail probabilities, which is what
/// a 4-sigma band means when the count distribution is far from normal.
pub fn poisson_band_ok(count: u64, mean: f64) -> bool {
    if mean >= GAUSSIAN_REGIME {
        return (count as f64 - mean).abs() <= 4.0 * mean.sqrt();
    }
    if count as f64 > mean + 40.0 * (mean.sqrt() + 1.0) {
        return false;
    }
    let (le, ge) = poisson_tails(count, mean);
    le >= FOUR_SIGMA_TAIL && ge >= FOUR_SIGMA_TAIL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_constant_matches_normal_cdf() {
        // 0.5 erfc(4 / sqrt 2)
        let q = 0.5 * libm_erfc(4.0 / std::f64::consts::SQRT_2);
        assert!((q - FOUR_SIGMA_TAIL).abs() < 1e-15);
    }

    fn libm_erfc(x: f64) -> f64 {
        pairemit_core::math::erfc(x)
    }

    #[test]
    fn poisson_tails_known_values() {
        let (le, ge) = poisson_tails(0, 2.0);
        assert!((le - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(ge, 1.0);
        let (le, ge) = poisson_tails(3, 2.0);
        let p = |k: i32| (-2.0f64).exp() * 2f64.powi(k) / [1.0, 1.0, 2.0, 6.0][k as usize];
        assert!((le - (p(0) + p(1) + p(2) + p(3))).abs() < 1e-15);
        assert!((ge - (1.0 - p(0) - p(1) - p(2))).abs() < 1e-15);
    }

    #[test]
    fn band_accepts_typical_and_rejects_extreme_counts() {
        assert!(poisson_band_ok(1, 0.01));
        assert!(!poisson_band_ok(5, 0.01));
        assert!(poisson_band_ok(10, 10.0));
        assert!(!poisson_band_ok(40, 10.0));
        assert!(!poisson_band_ok(0, 30.0));
        assert!(poisson_band_ok(10_300, 10_000.0));
        assert!(!poisson_band_ok(10_500, 10_000.0));
    }
}
