//! Principal eigenvalues of periodic-parabolic problems with a degenerate
//! penalty weight `lambda m(x, t)`, and the penalty limit `lambda -> inf`.
//!
//! The pipeline is: [`model`] samples coefficients on a space-time lattice,
//! [`operator`] assembles the elliptic operator per level, [`evolve`]
//! time-steps the penalized equation, [`spectral`] builds the period map and
//! its principal eigenpair, [`limitflow`] follows `lambda` to infinity,
//! [`kernel`] audits the heat kernel and [`admissibility`] inspects the
//! vanishing set of the weight.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod io;
pub mod kernel;
pub mod limitflow;
pub mod model;
pub mod operator;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
