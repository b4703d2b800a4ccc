//! Simulator for a spin-dependent double-well optical lattice.
//!
//! The crate builds the lattice light field from four beams, derives the
//! state-dependent potentials of the m_F = −1 and m_F = 0 states, solves for
//! vibrational levels, propagates spinor wavefunctions through time-dependent
//! lattice controls and rf pulses, and runs Monte Carlo spectroscopy.
//!
//! Units: energies and frequencies in Hz, lengths in λ, times in μs.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod fitting;
pub mod grid;
pub mod protocols;
pub mod spectroscopy;
pub mod stationary;

pub use constants::{BiasField, PhysicalConstants};
pub use error::{Error, Result};
pub use field::{Beam, BeamSet, FieldPoint, LatticeControls, SpinPotentialGrid};
pub use grid::Grid1D;
