//! Numerical core for studying vanishing central values of quadratic twists
//! of elliptic-curve L-functions.
//!
//! The crate is `no_std` (with `alloc`). It covers point counting and
//! Dirichlet coefficients, Kronecker characters and twist families, smoothed
//! central values with truncation control, moment polynomials via
//! multivariate residues, and the closed-form second-order predictions for
//! vanishing ratios.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arith;
pub mod conjecture;
pub mod constants;
mod cpu;
pub mod curve;
pub mod error;
pub mod family;
pub mod kronecker;
pub mod lvalue;
pub mod moments;
mod pointcount;
pub mod report;
pub mod series;

pub use curve::{an_table, CoefficientTable, CurveSpec};
pub use error::{Error, Result};
