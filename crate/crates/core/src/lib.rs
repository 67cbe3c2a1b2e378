//! Numerical kernels for two-atom spontaneous emission after photodissociation.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation:
//!
//! * [`kinetics`]: closed-form cumulative counts and detection densities of the
//!   first photon, the second photon and a single detector.
//! * [`event_sim`]: per-molecule emission and detection events drawn from
//!   counter-based substreams, so any partition of the molecule range produces
//!   the same records.
//! * [`inference`]: exponential-rate estimators and Kolmogorov–Smirnov tests.
//! * [`quantum_state`]: Gaussian packets, gridded one- and two-particle
//!   states, free evolution, recoil and Schmidt spectra.
//! * [`amplitude`]: transition amplitudes and emission-rate ratios for the
//!   symmetrized two-boson states and their non-entangled, non-symmetrized and
//!   entangled-final variants.
//!
//! Natural units are used throughout the quantum part (ħ = 1, atomic mass 1).
//! Rates in the kinetic part carry whatever time unit the caller picks.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod amplitude;
pub mod error;
pub mod event_sim;
pub mod inference;
pub mod kinetics;
pub mod math;
pub mod quantum_state;
pub mod rng;

pub use error::{Error, Result};
