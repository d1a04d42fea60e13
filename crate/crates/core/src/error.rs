//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Quantum numbers that cannot label a physical state, e.g. j + m not an
    /// integer or n <= l.
    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    /// An angular channel that violates a dipole selection rule.
    #[error("selection rule violated: {0}")]
    SelectionRule(String),

    /// Species data file problems: missing series, malformed numbers.
    #[error("species data: {0}")]
    SpeciesData(String),

    /// Numerical failure with diagnostics (integration, eigensolve).
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// A perturbative quantity was requested for a resonant (near-zero
    /// defect) channel.
    #[error("resonant channel: {0}")]
    Resonant(String),

    /// Parse errors for state and channel specifications.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input combinations the operation cannot work with.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
