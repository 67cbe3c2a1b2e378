use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, SpatialGrid};
use crate::error::{Error, Result};
use crate::math::{exp, log, sqrt, PI};

/// Overlaps whose magnitude falls below this are reported as exactly zero.
pub const OVERLAP_UNDERFLOW: f64 = 1e-300;

/// Free Gaussian wave packet (ħ = m = 1):
///
/// `ψ(x) = (2π)^{-1/4} (σ + i t / 2σ)^{-1/2} exp(-(x - c)^2 / (4σ^2 + 2 i t) + i p (x - c) + i θ)`
///
/// where `σ = width_sigma` is the waist width, `t` the time elapsed since the
/// waist, `c = center` the current center, `p = momentum` and `θ = phase`.
/// The position spread at time `t` is `sqrt(σ^2 + (t / 2σ)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: f64,
    pub momentum: f64,
    pub width_sigma: f64,
    pub phase: f64,
    pub t: f64,
}

/// Packet at its waist with zero phase.
pub fn make_packet(center: f64, momentum: f64, width_sigma: f64) -> Result<GaussianPacket> {
    if !(width_sigma > 0.0) || !width_sigma.is_finite() {
        return Err(Error::param("width_sigma", "width must be finite and positive"));
    }
    if !center.is_finite() || !momentum.is_finite() {
        return Err(Error::param("center", "center and momentum must be finite"));
    }
    Ok(GaussianPacket {
        center,
        momentum,
        width_sigma,
        phase: 0.0,
        t: 0.0,
    })
}

impl GaussianPacket {
    /// `1 / (4σ^2 + 2 i t)`.
    fn alpha(&self) -> Complex64 {
        Complex64::new(4.0 * self.width_sigma * self.width_sigma, 2.0 * self.t).inv()
    }

    fn prefactor(&self) -> Complex64 {
        let s = Complex64::new(self.width_sigma, self.t / (2.0 * self.width_sigma));
        s.sqrt().inv() * libm::pow(2.0 * PI, -0.25)
    }

    pub fn amplitude(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        let arg = -self.alpha() * d * d + Complex64::new(0.0, self.momentum * d + self.phase);
        self.prefactor() * arg.exp()
    }

    pub fn position_sigma(&self) -> f64 {
        let s = self.width_sigma;
        sqrt(s * s + (self.t / (2.0 * s)) * (self.t / (2.0 * s)))
    }

    pub fn mean_position(&self) -> f64 {
        self.center
    }

    pub fn mean_momentum(&self) -> f64 {
        self.momentum
    }

    /// Exact free evolution by `dt`.
    pub fn evolve_free(&self, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", "evolution time must be finite and non-negative"));
        }
        Ok(GaussianPacket {
            center: self.center + self.momentum * dt,
            phase: self.phase + 0.5 * self.momentum * self.momentum * dt,
            t: self.t + dt,
            ..*self
        })
    }

    /// Multiplies by `e^{i k x}`: shifts the momentum by `k`, leaves the
    /// density untouched.
    pub fn apply_recoil(&self, k: f64) -> Self {
        GaussianPacket {
            momentum: self.momentum + k,
            phase: self.phase + k * self.center,
            ..*self
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> GridFunction {
        GridFunction::from_fn(*grid, |x| self.amplitude(x))
    }
}

/// Result of a closed-form overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub value: Complex64,
    /// Set when the magnitude fell below [`OVERLAP_UNDERFLOW`] and was clamped to 0.
    pub underflow: bool,
}

impl Overlap {
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.value.norm_sqr()
    }
}

/// `<a|b>` in closed form (complex Gaussian integral), evaluated in log
/// space so that widely separated packets give a clean zero.
pub fn overlap(a: &GaussianPacket, b: &GaussianPacket) -> Overlap {
    let aa = a.alpha().conj();
    let ab = b.alpha();
    let i = Complex64::i();
    // conj(ψa) ψb = pref * exp(-A x^2 + B x + C)
    let quad = aa + ab;
    let lin = aa * (2.0 * a.center) + ab * (2.0 * b.center) + i * (b.momentum - a.momentum);
    let cons = -aa * (a.center * a.center) - ab * (b.center * b.center)
        + i * (a.momentum * a.center - b.momentum * b.center - a.phase + b.phase);
    let pref = a.prefactor().conj() * b.prefactor() * (Complex64::new(PI, 0.0) / quad).sqrt();
    let expo = lin * lin / (quad * 4.0) + cons;
    let log_mag = log(pref.norm()) + expo.re;
    if log_mag < log(OVERLAP_UNDERFLOW) {
        return Overlap {
            value: Complex64::new(0.0, 0.0),
            underflow: true,
        };
    }
    let value = Complex64::from_polar(exp(log_mag), pref.arg() + expo.im);
    Overlap {
        value,
        underflow: false,
    }
}
