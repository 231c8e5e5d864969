//! Winding of complex Gaussian stationary processes: spectral measures,
//! variance kernels, Monte Carlo simulation and the statistics used to
//! compare them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
