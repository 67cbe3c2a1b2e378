//! One- and two-particle center-of-mass states.

mod grid;
mod packet;
mod schmidt;
mod two_atom;

pub use grid::{GridFunction, SpatialGrid, MIN_GRID_POINTS};
pub use packet::{make_packet, overlap, GaussianPacket, Overlap, OVERLAP_UNDERFLOW};
pub use schmidt::schmidt_spectrum;
pub use two_atom::{
    kernel_symmetrized_norm, make_two_atom_gaussian, packet_pair_symmetrized_norm,
    pair_norm_from_overlap, symmetrized_norm, GridKernel, InternalLevels, StateKind,
    SymmetrizationInput, TwoAtomState, NORM_TOLERANCE, TRUNCATION_TOLERANCE,
};
