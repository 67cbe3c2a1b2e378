use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{pairwise_sum_by, pairwise_sum_complex_by, sqrt, PI};

pub const MIN_GRID_POINTS: usize = 64;

/// Uniform 1D grid including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::param("x_max", "grid bounds must be finite with x_max > x_min"));
        }
        if n_points < MIN_GRID_POINTS {
            return Err(Error::param(
                "n_points",
                format!("{n_points} points, at least {MIN_GRID_POINTS} required"),
            ));
        }
        Ok(SpatialGrid {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn centered(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Angular wavenumbers of the discrete Fourier modes, in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / (n as f64 * self.spacing());
        (0..n)
            .map(|j| {
                let m = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }

    pub(crate) fn ensure_same(&self, other: &SpatialGrid) -> Result<()> {
        if self != other {
            return Err(Error::IncompatibleRepresentation(format!(
                "grids differ: [{}, {}]x{} vs [{}, {}]x{}",
                self.x_min, self.x_max, self.n_points, other.x_min, other.x_max, other.n_points
            )));
        }
        Ok(())
    }
}

/// In-place discrete Fourier transform, `sign = -1` forward, `+1` inverse
/// (unnormalized). Radix-2 for power-of-two lengths, direct sum otherwise.
pub(crate) fn fft_in_place(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if !n.is_power_of_two() {
        let out: Vec<Complex64> = (0..n)
            .map(|k| {
                pairwise_sum_complex_by(n, &|j| {
                    let ang = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    data[j] * Complex64::from_polar(1.0, ang)
                })
            })
            .collect();
        data.copy_from_slice(&out);
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // twiddles from the angle directly to avoid drift from repeated products
                let w = Complex64::from_polar(1.0, ang * k as f64);
                let u = data[start + k];
                let v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

/// Exact free evolution of a periodic band-limited sample vector:
/// multiply each Fourier mode by `exp(-i k^2 dt / 2)` (ħ = m = 1).
pub(crate) fn free_propagate(values: &mut [Complex64], wavenumbers: &[f64], dt: f64) {
    fft_in_place(values, -1.0);
    let inv_n = 1.0 / values.len() as f64;
    for (v, &k) in values.iter_mut().zip(wavenumbers) {
        *v *= Complex64::from_polar(inv_n, -0.5 * k * k * dt);
    }
    fft_in_place(values, 1.0);
}

/// One-particle wave function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::IncompatibleRepresentation(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: SpatialGrid, f: F) -> Self {
        let values = grid.points().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing() * pairwise_sum_by(self.values.len(), &|i| self.values[i].norm_sqr())
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NumericalDegeneracy("function has zero or infinite norm".into()));
        }
        let s = 1.0 / sqrt(n);
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    /// `<self|other>` by the rectangle rule.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let s = pairwise_sum_complex_by(self.values.len(), &|i| {
            self.values[i].conj() * other.values[i]
        });
        Ok(s * self.grid.spacing())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.spacing();
        dx * pairwise_sum_by(self.values.len(), &|i| self.grid.x(i) * self.values[i].norm_sqr())
            / self.norm_sq()
    }

    /// Position standard deviation.
    pub fn position_sigma(&self) -> f64 {
        let mean = self.mean_position();
        let dx = self.grid.spacing();
        let var = dx
            * pairwise_sum_by(self.values.len(), &|i| {
                let d = self.grid.x(i) - mean;
                d * d * self.values[i].norm_sqr()
            })
            / self.norm_sq();
        sqrt(var)
    }

    /// Momentum expectation from the discrete spectrum.
    pub fn mean_momentum(&self) -> f64 {
        let mut spec = self.values.clone();
        fft_in_place(&mut spec, -1.0);
        let ks = self.grid.wavenumbers();
        let total = pairwise_sum_by(spec.len(), &|j| spec[j].norm_sqr());
        pairwise_sum_by(spec.len(), &|j| ks[j] * spec[j].norm_sqr()) / total
    }

    pub fn evolve_free(&self, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", "evolution time must be finite and non-negative"));
        }
        let mut out = self.clone();
        if dt > 0.0 {
            free_propagate(&mut out.values, &self.grid.wavenumbers(), dt);
        }
        Ok(out)
    }

    /// Multiplies by the plane wave `e^{i k x}`.
    pub fn apply_recoil(&self, k: f64) -> Self {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, k * self.grid.x(i));
        }
        out
    }
}
