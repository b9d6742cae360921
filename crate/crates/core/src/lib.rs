//! Numerical laboratory for the Yamabe functional under Ricci flow.
//!
//! The crate evaluates the Yamabe quotient and its subcritical
//! regularization, solves the corresponding Euler–Lagrange systems, runs
//! Ricci flow on a homogeneous SU(2) backend and on rotationally symmetric
//! spheres, and compares finite-difference derivatives of the tracked
//! constant `Ỹ_p(t)` with the closed-form evolution formula.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod cli;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod spectral;
pub mod verifier;
pub mod yamabe;

pub use error::{Error, Result};
