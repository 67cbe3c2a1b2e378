use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{free_propagate, GridFunction, SpatialGrid};
use super::packet::{overlap, GaussianPacket};
use crate::error::{Error, Result};
use crate::math::{abs, erfc, exp, pairwise_sum_by, pairwise_sum_complex_by, sqrt};

/// Probability mass a constructed state may lose outside its grid.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

/// Tolerance for the unit-norm precondition on inputs.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Two-particle amplitude `Ψ(x_i, y_j)` on the square of a 1D grid,
/// stored row-major (`x` is the row index).
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl GridKernel {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::IncompatibleRepresentation(format!(
                "{} samples for a {n}x{n} kernel",
                values.len()
            )));
        }
        Ok(GridKernel { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: SpatialGrid, f: F) -> Self {
        let n = grid.len();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x = grid.x(i);
            for j in 0..n {
                values.push(f(x, grid.x(j)));
            }
        }
        GridKernel { grid, values }
    }

    /// `a(x) b(y)`.
    pub fn product(a: &GridFunction, b: &GridFunction) -> Result<Self> {
        a.grid().ensure_same(b.grid())?;
        let (av, bv) = (a.values(), b.values());
        let values = av.iter().flat_map(|&ai| bv.iter().map(move |&bj| ai * bj)).collect();
        Ok(GridKernel {
            grid: *a.grid(),
            values,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn norm_sq(&self) -> f64 {
        let dx = self.grid.spacing();
        dx * dx * pairwise_sum_by(self.values.len(), &|k| self.values[k].norm_sqr())
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NumericalDegeneracy("kernel is not normalizable".into()));
        }
        let s = 1.0 / sqrt(n);
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn inner(&self, other: &GridKernel) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let dx = self.grid.spacing();
        let s = pairwise_sum_complex_by(self.values.len(), &|k| {
            self.values[k].conj() * other.values[k]
        });
        Ok(s * dx * dx)
    }

    /// `Ψ(y, x)`.
    pub fn swapped(&self) -> Self {
        let n = self.grid.len();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(self.at(j, i));
            }
        }
        GridKernel {
            grid: self.grid,
            values,
        }
    }

    /// `<Ψ(x,y)|Ψ(y,x)>` without building the swapped copy.
    pub fn exchange_overlap(&self) -> Complex64 {
        let n = self.grid.len();
        let dx = self.grid.spacing();
        pairwise_sum_complex_by(n * n, &|k| {
            let (i, j) = (k / n, k % n);
            self.values[k].conj() * self.at(j, i)
        }) * dx
            * dx
    }

    /// `max |Ψ(x,y) - Ψ(y,x)|` over the grid.
    pub fn swap_asymmetry(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.at(i, j) - self.at(j, i)).norm());
            }
        }
        worst
    }

    pub fn add(&self, other: &GridKernel) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridKernel {
            grid: self.grid,
            values,
        })
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= s);
        self
    }

    /// Free evolution of both particles. The two-particle propagator is the
    /// tensor product of one-particle propagators, so rows and columns are
    /// propagated independently.
    pub fn evolve_free(&self, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", "evolution time must be finite and non-negative"));
        }
        let mut out = self.clone();
        if dt == 0.0 {
            return Ok(out);
        }
        let n = self.grid.len();
        let ks = self.grid.wavenumbers();
        for row in out.values.chunks_mut(n) {
            free_propagate(row, &ks, dt);
        }
        let mut col = alloc::vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = out.values[i * n + j];
            }
            free_propagate(&mut col, &ks, dt);
            for i in 0..n {
                out.values[i * n + j] = col[i];
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateKind {
    /// `Ψ ∝ exp(-(x+y)^2 / X^2 - (x-y)^2 / Y^2)`.
    AnalyticCorrelatedGaussian { sum_width: f64, relative_width: f64 },
    GridKernel,
    /// `χ(x) ξ(y)` before symmetrization.
    ProductPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InternalLevels {
    BothExcited,
    OneExcitedSymmetrized,
    BothGround,
}

/// Two-atom state `N (Ψ(x,y) + Ψ(y,x)) |internal>`. The kernel holds the
/// unit-normalized `Ψ` before symmetrization; `norm_coefficient` is `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAtomState {
    pub kind: StateKind,
    pub internal: InternalLevels,
    kernel: GridKernel,
    norm_coefficient: f64,
}

impl TwoAtomState {
    /// Wraps an arbitrary kernel. It is normalized here.
    pub fn from_kernel(kernel: GridKernel, internal: InternalLevels) -> Result<Self> {
        let kernel = kernel.normalized()?;
        let norm_coefficient = kernel_symmetrized_norm(&kernel)?;
        Ok(TwoAtomState {
            kind: StateKind::GridKernel,
            internal,
            kernel,
            norm_coefficient,
        })
    }

    /// Symmetrized product `N (χ(x) ξ(y) + χ(y) ξ(x))` of two packets.
    pub fn product_pair(
        chi: &GridFunction,
        xi: &GridFunction,
        internal: InternalLevels,
    ) -> Result<Self> {
        let chi = chi.clone().normalized()?;
        let xi = xi.clone().normalized()?;
        let kernel = GridKernel::product(&chi, &xi)?;
        let norm_coefficient = pair_norm_from_overlap(chi.inner(&xi)?.norm_sqr());
        Ok(TwoAtomState {
            kind: StateKind::ProductPair,
            internal,
            kernel,
            norm_coefficient,
        })
    }

    pub fn kernel(&self) -> &GridKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.kernel.grid()
    }

    pub fn norm_coefficient(&self) -> f64 {
        self.norm_coefficient
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.kernel.swap_asymmetry() <= tol
    }

    /// The normalized spatial part `N (Ψ(x,y) + Ψ(y,x))`.
    pub fn symmetrized_kernel(&self) -> GridKernel {
        self.kernel
            .add(&self.kernel.swapped())
            .expect("same grid")
            .scale(self.norm_coefficient)
    }

    /// Closed-form amplitude for the analytic kind, before normalization.
    pub fn analytic_amplitude(&self, x: f64, y: f64) -> Option<f64> {
        match self.kind {
            StateKind::AnalyticCorrelatedGaussian {
                sum_width,
                relative_width,
            } => Some(correlated_gaussian(x, y, sum_width, relative_width)),
            _ => None,
        }
    }

    pub fn evolve_free(&self, dt: f64) -> Result<Self> {
        Ok(TwoAtomState {
            kernel: self.kernel.evolve_free(dt)?,
            ..self.clone()
        })
    }
}

fn correlated_gaussian(x: f64, y: f64, sum_width: f64, relative_width: f64) -> f64 {
    let s = x + y;
    let d = x - y;
    exp(-s * s / (sum_width * sum_width) - d * d / (relative_width * relative_width))
}

/// Probability mass of the correlated Gaussian lying outside the grid square,
/// bounded by the sum of the four one-dimensional marginal tails.
fn truncated_mass(sum_width: f64, relative_width: f64, grid: &SpatialGrid) -> f64 {
    // |Ψ|^2 has marginal standard deviation sqrt(X^2 + Y^2) / 4 in x and in y
    let sigma = sqrt(sum_width * sum_width + relative_width * relative_width) / 4.0;
    let tail = |edge: f64| 0.5 * erfc(abs(edge) / (sigma * core::f64::consts::SQRT_2));
    let lo = if grid.x_min() < 0.0 { tail(grid.x_min()) } else { 0.5 };
    let hi = if grid.x_max() > 0.0 { tail(grid.x_max()) } else { 0.5 };
    2.0 * (lo + hi)
}

/// Symmetric correlated Gaussian `Ψ ∝ exp(-(x+y)^2/X^2 - (x-y)^2/Y^2)` on `grid`,
/// normalized on the grid. Separable exactly when `X = Y`.
pub fn make_two_atom_gaussian(sum_width: f64, relative_width: f64, grid: &SpatialGrid) -> Result<TwoAtomState> {
    if !(sum_width > 0.0) || !sum_width.is_finite() {
        return Err(Error::param("sum_width", "X must be finite and positive"));
    }
    if !(relative_width > 0.0) || !relative_width.is_finite() {
        return Err(Error::param("relative_width", "Y must be finite and positive"));
    }
    let widest = sum_width.max(relative_width);
    if grid.x_max() - grid.x_min() < 6.0 * widest {
        return Err(Error::param("grid", "grid must span at least 6 max(X, Y)"));
    }
    let lost = truncated_mass(sum_width, relative_width, grid);
    if lost > TRUNCATION_TOLERANCE {
        return Err(Error::DomainTruncation {
            lost,
            tolerance: TRUNCATION_TOLERANCE,
        });
    }
    let kernel = GridKernel::from_fn(*grid, |x, y| {
        Complex64::new(correlated_gaussian(x, y, sum_width, relative_width), 0.0)
    })
    .normalized()?;
    let norm_coefficient = kernel_symmetrized_norm(&kernel)?;
    Ok(TwoAtomState {
        kind: StateKind::AnalyticCorrelatedGaussian {
            sum_width,
            relative_width,
        },
        internal: InternalLevels::BothExcited,
        kernel,
        norm_coefficient,
    })
}

fn check_unit(norm_sq: f64, what: &str) -> Result<()> {
    if abs(norm_sq - 1.0) > NORM_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "{what} has squared norm {norm_sq}, expected 1"
        )));
    }
    Ok(())
}

/// `(2 + 2 Re<Ψ(x,y)|Ψ(y,x)>)^{-1/2}` for a unit-normalized kernel.
pub fn kernel_symmetrized_norm(kernel: &GridKernel) -> Result<f64> {
    check_unit(kernel.norm_sq(), "kernel")?;
    let denom = 2.0 + 2.0 * kernel.exchange_overlap().re;
    if !(denom > 1e-12) {
        return Err(Error::NumericalDegeneracy(
            "antisymmetric kernel vanishes under symmetrization".into(),
        ));
    }
    Ok(1.0 / sqrt(denom))
}

/// `(2 + 2 |<ψ|φ>|^2)^{-1/2}` given `|<ψ|φ>|^2`.
pub fn pair_norm_from_overlap(overlap_sq: f64) -> f64 {
    1.0 / sqrt(2.0 + 2.0 * overlap_sq)
}

/// Normalization coefficient of the symmetrized product of two packets.
pub fn packet_pair_symmetrized_norm(a: &GaussianPacket, b: &GaussianPacket) -> f64 {
    pair_norm_from_overlap(overlap(a, b).norm_sqr())
}

/// Either of the two inputs accepted by [`symmetrized_norm`].
pub enum SymmetrizationInput<'a> {
    State(&'a TwoAtomState),
    Kernel(&'a GridKernel),
    Packets(&'a GaussianPacket, &'a GaussianPacket),
    GridPair(&'a GridFunction, &'a GridFunction),
}

pub fn symmetrized_norm(input: SymmetrizationInput<'_>) -> Result<f64> {
    match input {
        SymmetrizationInput::State(s) => kernel_symmetrized_norm(s.kernel()),
        SymmetrizationInput::Kernel(k) => kernel_symmetrized_norm(k),
        SymmetrizationInput::Packets(a, b) => Ok(packet_pair_symmetrized_norm(a, b)),
        SymmetrizationInput::GridPair(a, b) => {
            check_unit(a.norm_sq(), "first function")?;
            check_unit(b.norm_sq(), "second function")?;
            Ok(pair_norm_from_overlap(a.inner(b)?.norm_sqr()))
        }
    }
}
