//! Closed-form emission counts and detection densities for a cascade of two
//! photons per molecule.
//!
//! With `n0` molecules, first photons arrive at rate `gamma_f` and the second
//! photon of a pair follows at rate `gamma_s`. A single detector in the
//! product-state picture sees photons at rate `gamma`. The three pictures are
//! compatible when `gamma_f = 2 gamma` and `gamma_s = gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{abs, exp, expm1};

/// Relative rate difference below which the equal-rate limit is used for the
/// second-photon curves.
pub const DEGENERATE_RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub gamma: f64,
    pub gamma_f: f64,
    pub gamma_s: f64,
}

impl RateTriple {
    pub fn new(gamma: f64, gamma_f: f64, gamma_s: f64) -> Result<Self> {
        let r = RateTriple {
            gamma,
            gamma_f,
            gamma_s,
        };
        r.validate()?;
        Ok(r)
    }

    /// The rates that make the first/second and per-detector curves agree:
    /// `gamma_f = 2 gamma`, `gamma_s = gamma`.
    pub fn compatible(gamma: f64) -> Result<Self> {
        Self::new(gamma, 2.0 * gamma, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("gamma_f", self.gamma_f),
            ("gamma_s", self.gamma_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "rates must be finite and strictly positive"));
            }
        }
        Ok(())
    }

    fn is_degenerate(&self) -> bool {
        abs(self.gamma_s - self.gamma_f) / self.gamma_f < DEGENERATE_RATE_TOLERANCE
    }
}

/// Expected cumulative counts at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSnapshot {
    pub t: f64,
    pub n_first: f64,
    pub n_second: f64,
    /// `n_first + n_second`.
    pub n_total: f64,
    /// Per-detector count, half the total.
    pub n_detector: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", "time must be finite and non-negative"));
    }
    Ok(())
}

/// `n0 (1 - e^{-gamma_f t})`.
pub fn first_counts(t: f64, gamma_f: f64, n0: f64) -> f64 {
    -n0 * expm1(-gamma_f * t)
}

/// Second-photon count for distinct rates.
///
/// `N_f - n0 gamma_f / (gamma_s - gamma_f) (e^{-gamma_f t} - e^{-gamma_s t})`,
/// with the bracket rewritten through `expm1` so the expression stays
/// accurate as `gamma_s` approaches `gamma_f`.
pub fn second_counts_distinct(t: f64, gamma_f: f64, gamma_s: f64, n0: f64) -> f64 {
    let delta = gamma_s - gamma_f;
    // e^{-gf t} - e^{-gs t} = -e^{-gf t} expm1(-delta t)
    let bracket = -exp(-gamma_f * t) * expm1(-delta * t);
    first_counts(t, gamma_f, n0) - n0 * gamma_f / delta * bracket
}

/// Second-photon count when both stages share the rate `gamma`:
/// `n0 (1 - e^{-gamma t} - gamma t e^{-gamma t})`.
pub fn second_counts_equal_rates(t: f64, gamma: f64, n0: f64) -> f64 {
    let gt = gamma * t;
    n0 * (-expm1(-gt) - gt * exp(-gt))
}

pub fn cumulative_counts(t: f64, rates: &RateTriple, n0: f64) -> Result<CountSnapshot> {
    check_time(t)?;
    rates.validate()?;
    if !(n0 > 0.0) {
        return Err(Error::param("n0", "molecule count must be positive"));
    }
    let n_first = first_counts(t, rates.gamma_f, n0);
    let n_second = if rates.is_degenerate() {
        second_counts_equal_rates(t, rates.gamma_f, n0)
    } else {
        second_counts_distinct(t, rates.gamma_f, rates.gamma_s, n0)
    };
    // rounding can push N_s a hair past N_f at large t
    let n_second = n_second.clamp(0.0, n_first);
    let n_total = n_first + n_second;
    Ok(CountSnapshot {
        t,
        n_first,
        n_second,
        n_total,
        n_detector: n_total / 2.0,
    })
}

/// Normalized detections per unit time. The per-detector density is half the
/// total photon density, which reduces to `gamma e^{-gamma t}` for compatible
/// rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionDensities {
    pub n_first: f64,
    pub n_second: f64,
    pub n_detector: f64,
}

pub fn detection_densities(t: f64, rates: &RateTriple) -> Result<DetectionDensities> {
    check_time(t)?;
    rates.validate()?;
    let gf = rates.gamma_f;
    let gs = rates.gamma_s;
    let n_first = gf * exp(-gf * t);
    let n_second = if rates.is_degenerate() {
        gf * gf * t * exp(-gf * t)
    } else {
        let delta = gs - gf;
        gf * gs * exp(-gf * t) * (-expm1(-delta * t)) / delta
    };
    Ok(DetectionDensities {
        n_first,
        n_second,
        n_detector: 0.5 * (n_first + n_second),
    })
}

/// Density of `t1 - t2` for events that fire both detectors, with each photon
/// sent to either detector with equal probability: `(gamma_s / 2) e^{-gamma_s |tau|}`.
pub fn coincidence_density(tau: f64, rates: &RateTriple) -> f64 {
    0.5 * rates.gamma_s * exp(-rates.gamma_s * abs(tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_rates() -> RateTriple {
        RateTriple::compatible(1.0).unwrap()
    }

    #[test]
    fn counts_vanish_at_zero() {
        let c = cumulative_counts(0.0, &default_rates(), 1000.0).unwrap();
        assert_eq!(c.n_first, 0.0);
        assert_eq!(c.n_second, 0.0);
        assert_eq!(c.n_total, 0.0);
        assert_eq!(c.n_detector, 0.0);
    }

    #[test]
    fn counts_saturate() {
        let n0 = 1e6;
        let c = cumulative_counts(50.0, &default_rates(), n0).unwrap();
        assert!((c.n_first - n0).abs() <= 1e-12 * n0);
        assert!((c.n_second - n0).abs() <= 1e-12 * n0);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(matches!(
            cumulative_counts(-1.0, &default_rates(), 1.0),
            Err(Error::InvalidParameter { name: "t", .. })
        ));
        assert!(detection_densities(-0.5, &default_rates()).is_err());
    }

    #[test]
    fn non_positive_rates_rejected() {
        assert!(RateTriple::new(1.0, 0.0, 1.0).is_err());
        assert!(RateTriple::new(-1.0, 2.0, 1.0).is_err());
        assert!(RateTriple::new(1.0, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn densities_at_origin() {
        let d = detection_densities(0.0, &default_rates()).unwrap();
        assert_eq!(d.n_first, 2.0);
        assert_eq!(d.n_detector, 1.0);
        assert_eq!(d.n_second, 0.0);
    }

    #[test]
    fn degenerate_switch_uses_limit() {
        let r = RateTriple::new(1.0, 1.5, 1.5 * (1.0 + 1e-10)).unwrap();
        let n0 = 1e6;
        for &t in &[0.1, 0.7, 2.0, 5.0] {
            let c = cumulative_counts(t, &r, n0).unwrap();
            let lim = second_counts_equal_rates(t, 1.5, n0);
            assert!((c.n_second - lim).abs() <= 1e-8 * n0);
        }
    }

    #[test]
    fn equal_rate_limit_matches_series_expansion() {
        // Expanding the distinct-rate formula in delta = gs - gf:
        // N_s = N_s^lim + n0 (gf t)^2 e^{-gf t} (delta/gf) / 2 + O(delta^2)
        let gf = 2.0;
        let n0 = 1.0;
        for &eps in &[1e-4, 1e-6] {
            let gs = gf * (1.0 + eps);
            for &t in &[0.05, 0.5, 1.0, 3.0] {
                let x = gf * t;
                let series = second_counts_equal_rates(t, gf, n0) + n0 * x * x * exp(-x) * eps / 2.0;
                assert_relative_eq!(
                    second_counts_distinct(t, gf, gs, n0),
                    series,
                    epsilon = 2.0 * eps * eps
                );
            }
        }
    }

    #[test]
    fn argmax_of_second_density() {
        // d n_s / dt = 0 at t = ln 2 / gamma when gamma_f = 2 gamma, gamma_s = gamma
        let r = default_rates();
        let t_star = core::f64::consts::LN_2;
        let at = detection_densities(t_star, &r).unwrap().n_second;
        for &dt in &[1e-3, 1e-2, 1e-1] {
            assert!(detection_densities(t_star + dt, &r).unwrap().n_second < at);
            assert!(detection_densities(t_star - dt, &r).unwrap().n_second < at);
        }
        assert_relative_eq!(at, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn coincidence_density_is_symmetric_and_peaks_at_half_rate() {
        let r = RateTriple::new(1.0, 2.0, 1.3).unwrap();
        assert_eq!(coincidence_density(0.0, &r), 0.65);
        for &tau in &[0.1, 1.0, 4.0] {
            assert_eq!(coincidence_density(tau, &r), coincidence_density(-tau, &r));
        }
    }
}
