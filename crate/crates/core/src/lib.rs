//! Exact and approximate solvers for the attractive bosonic pairing model
//!
//! ```text
//! H = Σ_α ε_α n_α − g_eff B⁺B⁻,   B⁺ = Σ_α b_α⁺,   g_eff = g/L.
//! ```
//!
//! - [`model`]: level spectra, couplings and pair sectors.
//! - [`fock`]: dense matrices in the pair basis and exact diagonalization.
//! - [`richardson`]: Bethe roots by continuation from the free limit.
//! - [`integrability`]: commuting charges and their numerical checks.
//! - [`continuum`]: the thermodynamic limit on both sides of the transition.
//! - [`meanfield`]: finite-size mean-field and variational estimates.
//! - [`verify`]: solver cross-checks reduced to pass/fail numbers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

pub mod continuum;
pub mod fock;
pub mod integrability;
pub mod meanfield;
pub mod model;
pub mod quad;
pub mod richardson;
pub mod verify;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Fock(#[from] fock::FockError),
    #[error(transparent)]
    Richardson(#[from] richardson::RichardsonError),
    #[error(transparent)]
    Integrability(#[from] integrability::IntegrabilityError),
    #[error(transparent)]
    Continuum(#[from] continuum::ContinuumError),
    #[error(transparent)]
    MeanField(#[from] meanfield::MeanFieldError),
    #[error(transparent)]
    Quadrature(#[from] quad::QuadError),
}
