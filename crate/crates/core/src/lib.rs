//! Numerical laboratory for the PT-symmetric discrete nonlinear Schrödinger
//! lattice: breather continuation from the anti-continuum limit, Hessian
//! spectra, time evolution and Lyapunov-type diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod spectral;
pub mod stationary;

pub use error::{Error, Result};
pub use lattice::{DiagnosticRecord, LatticeState, Params};
pub use num_complex::Complex64 as C64;
