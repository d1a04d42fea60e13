//! Long-range interactions between like Rydberg atoms with full Zeeman
//! structure.
//!
//! The crate covers the chain from atomic structure to blockade figures of
//! merit:
//!
//! * [`angular`] — exact Clebsch-Gordan, 6j/9j and rotation coefficients for
//!   half-integer angular momenta.
//! * [`channel`] — the dimensionless dipole-dipole operator of an angular
//!   channel, its block diagonalization over total projection M, Förster
//!   zeros, and the coupled-basis picture.
//! * [`species`] / [`radial`] — quantum-defect energy levels, Numerov radial
//!   wavefunctions and dipole matrix elements for Rb, Cs and hydrogen-like
//!   test data.
//! * [`vdw`] — Förster channel enumeration, C6/C3 strengths, the degenerate
//!   van der Waals Hamiltonian and the crossover to resonant exchange.
//! * [`blockade`] — overlap factors, blockade and resonance shifts, angular
//!   scans and Gaussian ensemble averaging.
//! * [`dynamics`] — direct integration of the few-atom excitation amplitude
//!   equations used to validate the perturbative error estimates.

pub mod angular;
pub mod blockade;
pub mod channel;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod halfint;
pub mod radial;
pub mod selftest;
pub mod species;
pub mod state;
pub mod vdw;

pub use channel::{
    AngularChannel, AngularChannelMatrix, ChannelEigensystem, ChannelSpec, ForsterZeroReport,
};
pub use error::Error;
pub use halfint::HalfInt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
