//! Numerical laboratory for the graph of the additive Brownian sheet.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod error;
pub mod exponents;
pub mod figures;
pub mod fourier;
pub mod knapp;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod spectrum;
pub mod sum;
pub mod table;

pub use error::{Error, Result};
