//! Numerical laboratory for the relaxation of weakly perturbed Hamiltonians
//! H = H0 + lambda W with mean-field random perturbations.
//!
//! The crate builds the deterministic models and random perturbations
//! (`models`), diagonalizes and profiles them (`spectra`), solves the traced
//! self-consistent resolvent equation (`mde`), evolves expectation values
//! exactly (`dynamics`), evaluates the closed-form relaxation predictions
//! (`theory`), and stress-tests the resolvent laws the predictions rest on
//! (`lawcheck`).

pub mod dynamics;
pub mod error;
pub mod lawcheck;
pub mod linalg;
pub mod mde;
pub mod models;
pub mod spectra;
pub mod theory;

pub use error::{CoreError, Result};

/// Crate version for provenance records.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
