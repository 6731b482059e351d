//! Rotational uniqueness and local identification of oblique factor models.
//!
//! The oblique factor model `Sigma = Lambda Phi Lambda^T + Psi` is invariant
//! under `Lambda -> Lambda R`, `Phi -> R^-1 Phi R^-T` for any nonsingular `R`.
//! This crate decides, for a given pattern of fixed and restricted loadings,
//! which rotations remain admissible:
//!
//! * [`conditions`] checks the fixed-zero, rank, correlation-metric,
//!   polarity-truncation and fixed-value conditions.
//! * [`rotation`] solves for the admissible rotation set directly, enumerates
//!   sign flips and canonicalizes solutions.
//! * [`identification`] applies the Jacobian rank rule for local identification.
//! * [`estimation`] generates models and fits them from many starts, exposing
//!   the sign-flip modes of the discrepancy surface.
//! * [`cli`] backs the `fident` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod conditions;
pub mod error;
pub mod estimation;
pub mod identification;
pub mod linalg;
pub mod model;
pub mod rotation;
pub mod sampling;
pub mod spec_file;

pub use error::{FidentError, Result};
pub use model::{
    apply_rotation, assemble_sigma, rescale_units, CellSpec, FactorSolution, LoadingPattern,
    Metric, ModelSpec, RotationMatrix,
};
