//! Bound-state quantization through the quantum momentum function.
//!
//! The crate realizes the contour condition `(1/2π)∮ p dz = nℏ` for
//! one-dimensional wells, the WKB rule that follows from it, and the
//! per-loop condition for separable systems, and checks all of them against
//! closed forms and an independent Numerov eigenvalue oracle.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod ebk;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod potentials;
pub mod qmf;
pub mod quantize;
pub mod wkb;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potentials::{PotentialKind, PotentialModel, SolverConfig};
