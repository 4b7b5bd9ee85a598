//! Two-dimensional Stokes flow with regularized Stokeslets, including a
//! far-field correction that keeps problems with a nonzero net force
//! well-posed, the elastic force models used by the cell-mechanics
//! scenarios, and the scenarios themselves.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constraint;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod scenarios;
pub mod structures;
pub mod vec2;

pub use constraint::{CorrectionConfig, CorrectionMethod};
pub use error::{Error, Result};
pub use kernels::{FluidParams, PointForceSet};
pub use vec2::Vec2;
