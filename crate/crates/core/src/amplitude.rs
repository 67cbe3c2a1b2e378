//! Transition amplitudes and emission-rate ratios.
//!
//! All amplitudes are in units of the single-atom matrix element `M_s`, so a
//! squared amplitude summed over final states is directly the ratio of the
//! two-atom emission rate to the single-atom rate `Γ`.
//!
//! A final-state family is either the ordered product basis of grid points
//! (complete on the grid) or a user-supplied packet family, orthonormalized
//! before use. Given such a 1D basis `{b_a}`, every case below reduces to the
//! projection matrix `C_ab = <b_a(x) b_b(y)|U Ψ>`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{abs, pairwise_sum_by, pairwise_sum_complex_by, sqrt};
use crate::quantum_state::{
    kernel_symmetrized_norm, overlap, pair_norm_from_overlap, GaussianPacket, GridFunction,
    GridKernel, InternalLevels, TwoAtomState, NORM_TOLERANCE, TRUNCATION_TOLERANCE,
};

/// Kernels whose largest swap asymmetry is below this count as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Packets with `|<χ|ξ>|` within this of 0 or 1 count as orthogonal or equal.
pub const PAIR_OVERLAP_TOLERANCE: f64 = 1e-8;

/// Fraction of each grid edge inspected for wrap-around after propagation.
const EDGE_BAND_DIVISOR: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvolutionChoice {
    Identity,
    FreePropagation { dt: f64 },
}

impl EvolutionChoice {
    pub fn dt(&self) -> f64 {
        match self {
            EvolutionChoice::Identity => 0.0,
            EvolutionChoice::FreePropagation { dt } => *dt,
        }
    }

    fn apply(&self, kernel: &GridKernel) -> Result<GridKernel> {
        let out = match *self {
            EvolutionChoice::Identity => kernel.clone(),
            EvolutionChoice::FreePropagation { dt } => kernel.evolve_free(dt)?,
        };
        let lost = edge_mass(&out);
        if lost > TRUNCATION_TOLERANCE {
            return Err(Error::DomainTruncation {
                lost,
                tolerance: TRUNCATION_TOLERANCE,
            });
        }
        Ok(out)
    }
}

/// Probability in the outer bands of the grid square; mass there is about to
/// wrap around the periodic propagator.
fn edge_mass(kernel: &GridKernel) -> f64 {
    let n = kernel.grid().len();
    let band = (n / EDGE_BAND_DIVISOR).max(1);
    let dx = kernel.grid().spacing();
    let outer = |i: usize| i < band || i >= n - band;
    dx * dx
        * pairwise_sum_by(n * n, &|k| {
            let (i, j) = (k / n, k % n);
            if outer(i) || outer(j) {
                kernel.values()[k].norm_sqr()
            } else {
                0.0
            }
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisConvention {
    OrderedGridProduct,
    RestrictedSubset,
    /// One explicit final state, no sum.
    SingleFinalState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseLabel {
    EntangledMain,
    SecondEmission,
    Prop1Nonentangled,
    Prop2Nonsymmetrized,
    Prop3EntangledFinal,
    Prop4EntangledSecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRatioReport {
    /// Two-atom rate over single-atom rate.
    pub ratio: f64,
    /// Probability of the un-symmetrized initial kernel captured by the final
    /// family (1 for a complete basis).
    pub completeness_sum: f64,
    pub norm_coefficient_used: f64,
    pub case_label: CaseLabel,
    pub basis_convention: BasisConvention,
    /// Contribution of cross terms between the exchanged spatial matrix
    /// elements to `ratio`, where the case has any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference_term: Option<f64>,
}

/// The family of one-particle final wave functions.
#[derive(Debug, Clone)]
pub enum FinalStates {
    OrderedGrid,
    /// Normalized and Gram–Schmidt orthogonalized in the given order;
    /// linearly dependent members are dropped.
    Restricted(Vec<GridFunction>),
}

impl FinalStates {
    pub fn convention(&self) -> BasisConvention {
        match self {
            FinalStates::OrderedGrid => BasisConvention::OrderedGridProduct,
            FinalStates::Restricted(_) => BasisConvention::RestrictedSubset,
        }
    }

    pub fn from_packets(packets: &[GaussianPacket], grid: &crate::quantum_state::SpatialGrid) -> Self {
        FinalStates::Restricted(packets.iter().map(|p| p.sample(grid)).collect())
    }
}

fn orthonormalize(family: &[GridFunction]) -> Result<Vec<GridFunction>> {
    let mut out: Vec<GridFunction> = Vec::with_capacity(family.len());
    for f in family {
        let mut v = f.values().to_vec();
        let norm0 = sqrt(f.norm_sq());
        if !(norm0 > 0.0) {
            continue;
        }
        for b in &out {
            let c = b.inner(&GridFunction::new(*f.grid(), v.clone())?)?;
            for (vi, bi) in v.iter_mut().zip(b.values()) {
                *vi -= c * bi;
            }
        }
        let g = GridFunction::new(*f.grid(), v)?;
        if sqrt(g.norm_sq()) <= 1e-10 * norm0 {
            continue;
        }
        out.push(g.normalized()?);
    }
    if out.is_empty() {
        return Err(Error::InvalidCase("restricted final family is empty".into()));
    }
    Ok(out)
}

/// `C_ab = <b_a(x) b_b(y)|kernel>`, row-major `m x m`.
struct Projection {
    m: usize,
    c: Vec<Complex64>,
}

impl Projection {
    #[inline]
    fn at(&self, a: usize, b: usize) -> Complex64 {
        self.c[a * self.m + b]
    }

    fn new(kernel: &GridKernel, finals: &FinalStates) -> Result<Self> {
        let n = kernel.grid().len();
        let dx = kernel.grid().spacing();
        match finals {
            // b_a = δ_a / sqrt(dx), so C_ab = Ψ_ab dx
            FinalStates::OrderedGrid => Ok(Projection {
                m: n,
                c: kernel.values().iter().map(|v| v * dx).collect(),
            }),
            FinalStates::Restricted(family) => {
                let basis = orthonormalize(family)?;
                for b in &basis {
                    kernel.grid().ensure_same(b.grid())?;
                }
                let m = basis.len();
                // t_ib = sum_j Ψ_ij conj(b_b(y_j)) dx
                let mut t = alloc::vec![Complex64::new(0.0, 0.0); n * m];
                for i in 0..n {
                    for (bidx, b) in basis.iter().enumerate() {
                        let bv = b.values();
                        t[i * m + bidx] =
                            pairwise_sum_complex_by(n, &|j| kernel.at(i, j) * bv[j].conj()) * dx;
                    }
                }
                let mut c = alloc::vec![Complex64::new(0.0, 0.0); m * m];
                for (a, ba) in basis.iter().enumerate() {
                    let av = ba.values();
                    for bidx in 0..m {
                        c[a * m + bidx] =
                            pairwise_sum_complex_by(n, &|i| av[i].conj() * t[i * m + bidx]) * dx;
                    }
                }
                Ok(Projection { m, c })
            }
        }
    }

    fn captured(&self) -> f64 {
        pairwise_sum_by(self.c.len(), &|k| self.c[k].norm_sqr())
    }

    /// `Σ_ab |C_ab + C_ba|^2` and `Σ_ab 2 Re(C_ab conj(C_ba))`.
    fn exchange_sums(&self) -> (f64, f64) {
        let m = self.m;
        let total = pairwise_sum_by(m * m, &|k| {
            let (a, b) = (k / m, k % m);
            (self.at(a, b) + self.at(b, a)).norm_sqr()
        });
        let cross = pairwise_sum_by(m * m, &|k| {
            let (a, b) = (k / m, k % m);
            2.0 * (self.at(a, b) * self.at(b, a).conj()).re
        });
        (total, cross)
    }

    /// Squared overlaps with the orthonormal symmetric two-particle basis
    /// `(b_a b_b + b_b b_a)/sqrt(2)` for `a < b` and `b_a b_a`.
    fn symmetric_basis_weights(&self) -> f64 {
        let m = self.m;
        pairwise_sum_by(m * m, &|k| {
            let (a, b) = (k / m, k % m);
            if a < b {
                0.5 * (self.at(a, b) + self.at(b, a)).norm_sqr()
            } else if a == b {
                self.at(a, a).norm_sqr()
            } else {
                0.0
            }
        })
    }
}

fn check_normalized(f: &GridFunction, what: &str) -> Result<()> {
    let n = f.norm_sq();
    if abs(n - 1.0) > NORM_TOLERANCE {
        return Err(Error::InvalidState(format!("{what} has squared norm {n}, expected 1")));
    }
    Ok(())
}

/// `<o1(x) o2(y)|kernel>` summed row by row.
fn pair_projection(kernel: &GridKernel, o1: &GridFunction, o2: &GridFunction) -> Result<Complex64> {
    kernel.grid().ensure_same(o1.grid())?;
    kernel.grid().ensure_same(o2.grid())?;
    let n = kernel.grid().len();
    let dx = kernel.grid().spacing();
    let (v1, v2) = (o1.values(), o2.values());
    let s = pairwise_sum_complex_by(n, &|i| {
        v1[i].conj() * pairwise_sum_complex_by(n, &|j| kernel.at(i, j) * v2[j].conj())
    });
    Ok(s * dx * dx)
}

/// First-photon amplitude into the final pair `(out1, out2)`:
/// `sqrt(2) N_0 (<out1 out2|U Ψ(x,y)> + <out1 out2|U Ψ(y,x)>)`.
///
/// For symmetric `Ψ` both terms are equal and this is `2 sqrt(2) N_0 <out1 out2|U Ψ>`.
/// The sum is formed so that swapping `out1` and `out2` gives a bit-identical result.
pub fn first_emission_amplitude(
    psi0: &TwoAtomState,
    out1: &GridFunction,
    out2: &GridFunction,
    u: EvolutionChoice,
) -> Result<Complex64> {
    check_normalized(out1, "out1")?;
    check_normalized(out2, "out2")?;
    let n0 = kernel_symmetrized_norm(psi0.kernel())?;
    let evolved = u.apply(psi0.kernel())?;
    let direct = pair_projection(&evolved, out1, out2)?;
    let exchanged = pair_projection(&evolved, out2, out1)?;
    Ok((direct + exchanged) * (core::f64::consts::SQRT_2 * n0))
}

fn symmetrized_first_emission(
    state: &TwoAtomState,
    u: EvolutionChoice,
    finals: &FinalStates,
    case_label: CaseLabel,
) -> Result<RateRatioReport> {
    let evolved = u.apply(state.kernel())?;
    let proj = Projection::new(&evolved, finals)?;
    let n0 = state.norm_coefficient();
    let (total, cross) = proj.exchange_sums();
    Ok(RateRatioReport {
        ratio: 2.0 * n0 * n0 * total,
        completeness_sum: proj.captured(),
        norm_coefficient_used: n0,
        case_label,
        basis_convention: finals.convention(),
        interference_term: Some(2.0 * n0 * n0 * cross),
    })
}

/// First-emission rate over the single-atom rate, summing squared amplitudes
/// over every ordered final pair of the family. For a symmetric normalized
/// `Ψ` and a complete family this is `(2 sqrt(2) N_0)^2 = 2`.
pub fn first_emission_rate_ratio(
    psi0: &TwoAtomState,
    u: EvolutionChoice,
    finals: &FinalStates,
) -> Result<RateRatioReport> {
    symmetrized_first_emission(psi0, u, finals, CaseLabel::EntangledMain)
}

/// `sqrt(2) N_s (1 + |o|^2)` with `N_s = (2 + 2|o|^2)^{-1/2}`, `o = <ψ_ts|φ>`.
pub fn second_emission_amplitude_from_overlap(o: Complex64) -> Complex64 {
    let o2 = o.norm_sqr();
    let ns = pair_norm_from_overlap(o2);
    Complex64::new(core::f64::consts::SQRT_2 * ns * (1.0 + o2), 0.0)
}

pub fn second_emission_amplitude(psi_ts: &GaussianPacket, varphi: &GaussianPacket) -> Complex64 {
    second_emission_amplitude_from_overlap(overlap(psi_ts, varphi).value)
}

/// Evolves the pair left by the first emission freely for `dt`, gives the
/// emitting atom (`second`) a momentum kick `recoil_k`, and squares the
/// second-photon amplitude.
pub fn second_emission_rate_ratio(
    first_out: (&GaussianPacket, &GaussianPacket),
    dt: f64,
    recoil_k: f64,
) -> Result<RateRatioReport> {
    let (psi, phi) = first_out;
    let psi_ts = psi.evolve_free(dt)?;
    let varphi = phi.evolve_free(dt)?.apply_recoil(recoil_k);
    let o2 = overlap(&psi_ts, &varphi).norm_sqr();
    let ns = pair_norm_from_overlap(o2);
    let amp = second_emission_amplitude(&psi_ts, &varphi);
    Ok(RateRatioReport {
        ratio: amp.norm_sqr(),
        completeness_sum: 1.0,
        norm_coefficient_used: ns,
        case_label: CaseLabel::SecondEmission,
        basis_convention: BasisConvention::SingleFinalState,
        interference_term: Some(2.0 * ns * ns * 2.0 * o2),
    })
}

/// Inputs for the non-entangled, non-symmetrized and entangled-final variants.
#[derive(Debug, Clone, Copy)]
pub enum PropertyCase<'a> {
    /// Symmetrized product `N (χ(x) ξ(y) + χ(y) ξ(x))` with `χ ⟂ ξ` or `χ = ξ`.
    NonEntangled {
        chi: &'a GridFunction,
        xi: &'a GridFunction,
    },
    /// `Ψ(x,y)` without symmetrization; the atoms are distinguishable and the
    /// two emission channels are added as probabilities with weight 1/2.
    NonSymmetrized { psi: &'a TwoAtomState },
    /// Symmetric `Ψ` decaying into entangled symmetric final states.
    EntangledFinal { psi: &'a TwoAtomState },
    /// Second emission from an entangled intermediate state into entangled
    /// symmetric final states.
    EntangledSecond { intermediate: &'a TwoAtomState },
}

pub fn property_rate(
    case: PropertyCase<'_>,
    u: EvolutionChoice,
    finals: &FinalStates,
) -> Result<RateRatioReport> {
    match case {
        PropertyCase::NonEntangled { chi, xi } => {
            check_normalized(chi, "chi")?;
            check_normalized(xi, "xi")?;
            let o = chi.inner(xi)?.norm();
            if o > PAIR_OVERLAP_TOLERANCE && o < 1.0 - PAIR_OVERLAP_TOLERANCE {
                return Err(Error::InvalidCase(format!(
                    "non-entangled pair needs orthogonal or equal packets, |<chi|xi>| = {o}"
                )));
            }
            let state = TwoAtomState::product_pair(chi, xi, InternalLevels::BothExcited)?;
            symmetrized_first_emission(&state, u, finals, CaseLabel::Prop1Nonentangled)
        }
        PropertyCase::NonSymmetrized { psi } => {
            let evolved = u.apply(psi.kernel())?;
            let proj = Projection::new(&evolved, finals)?;
            let (a_channel, b_channel) = channel_probabilities(&proj);
            Ok(RateRatioReport {
                ratio: 0.5 * a_channel + 0.5 * b_channel,
                completeness_sum: proj.captured(),
                norm_coefficient_used: 1.0,
                case_label: CaseLabel::Prop2Nonsymmetrized,
                basis_convention: finals.convention(),
                interference_term: Some(0.0),
            })
        }
        PropertyCase::EntangledFinal { psi } => {
            require_symmetric(psi, "initial state")?;
            let evolved = u.apply(psi.kernel())?;
            let proj = Projection::new(&evolved, finals)?;
            // |sqrt(2) <Ψ~|U Ψ>|^2 summed over the symmetric final basis
            let weight = proj.symmetric_basis_weights();
            Ok(RateRatioReport {
                ratio: 2.0 * weight,
                completeness_sum: proj.captured(),
                norm_coefficient_used: psi.norm_coefficient(),
                case_label: CaseLabel::Prop3EntangledFinal,
                basis_convention: finals.convention(),
                interference_term: None,
            })
        }
        PropertyCase::EntangledSecond { intermediate } => {
            let evolved = u.apply(intermediate.kernel())?;
            let proj = Projection::new(&evolved, finals)?;
            // symmetric final states have N~_s = 1/2; with P = <Ψ*|U Ψ~>,
            // Q = <Ψ*|U Ψ~(y,x)> the amplitude is (P + Q) / sqrt(2)
            let m = proj.m;
            let nt = 0.5;
            let pq = |a: usize, b: usize| -> (Complex64, Complex64) {
                if a == b {
                    (proj.at(a, a), proj.at(a, a))
                } else {
                    let s = (proj.at(a, b) + proj.at(b, a)) * core::f64::consts::FRAC_1_SQRT_2;
                    (s, s)
                }
            };
            let ratio = pairwise_sum_by(m * m, &|k| {
                let (a, b) = (k / m, k % m);
                if a > b {
                    return 0.0;
                }
                let (p, q) = pq(a, b);
                2.0 * nt * nt * (p + q).norm_sqr()
            });
            let cross = pairwise_sum_by(m * m, &|k| {
                let (a, b) = (k / m, k % m);
                if a > b {
                    return 0.0;
                }
                let (p, q) = pq(a, b);
                2.0 * nt * nt * 2.0 * (p * q.conj()).re
            });
            Ok(RateRatioReport {
                ratio,
                completeness_sum: proj.captured(),
                norm_coefficient_used: nt,
                case_label: CaseLabel::Prop4EntangledSecond,
                basis_convention: finals.convention(),
                interference_term: Some(cross),
            })
        }
    }
}

fn require_symmetric(psi: &TwoAtomState, what: &str) -> Result<()> {
    let asym = psi.kernel().swap_asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::InvalidCase(format!(
            "{what} must be swap-symmetric, asymmetry {asym:e}"
        )));
    }
    Ok(())
}

/// Total probabilities of the two distinguishable channels: atom `a` emits
/// (final `ψ(x) φ(y)`, amplitude `C_ab`) or atom `b` emits (emitter wave
/// function in `y`, amplitude `C_ba`).
fn channel_probabilities(proj: &Projection) -> (f64, f64) {
    let m = proj.m;
    let a = pairwise_sum_by(m * m, &|k| proj.at(k / m, k % m).norm_sqr());
    let b = pairwise_sum_by(m * m, &|k| proj.at(k % m, k / m).norm_sqr());
    (a, b)
}

/// Amplitudes of the two distinguishable channels for one final pair, with
/// `emitter` the wave function of whichever atom emitted.
pub fn nonsymmetrized_channel_amplitudes(
    psi: &TwoAtomState,
    emitter: &GridFunction,
    spectator: &GridFunction,
    u: EvolutionChoice,
) -> Result<(Complex64, Complex64)> {
    check_normalized(emitter, "emitter")?;
    check_normalized(spectator, "spectator")?;
    let evolved = u.apply(psi.kernel())?;
    Ok((
        pair_projection(&evolved, emitter, spectator)?,
        pair_projection(&evolved, spectator, emitter)?,
    ))
}

/// Second-emission amplitude between two explicit entangled states:
/// `sqrt(2) N~_s (<Ψ*|U Ψ~(x,y)> + <Ψ*|U Ψ~(y,x)>)` with
/// `N~_s = (2 + 2 Re<Ψ*(x,y)|Ψ*(y,x)>)^{-1/2}`.
pub fn entangled_second_emission_amplitude(
    intermediate: &TwoAtomState,
    final_state: &TwoAtomState,
    u: EvolutionChoice,
) -> Result<Complex64> {
    let evolved = u.apply(intermediate.kernel())?;
    let nt = kernel_symmetrized_norm(final_state.kernel())?;
    let direct = final_state.kernel().inner(&evolved)?;
    let exchanged = final_state.kernel().inner(&evolved.swapped())?;
    Ok((direct + exchanged) * (core::f64::consts::SQRT_2 * nt))
}
