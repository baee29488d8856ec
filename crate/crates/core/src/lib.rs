//! Numerical Finsler geometry.

// Tensor code indexes several arrays by the same component index.
#![allow(clippy::needless_range_loop)]

pub mod audit;
pub mod classify;
pub mod cli;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod hamilton;
pub mod jets;
pub mod linalg;
pub mod metric;
pub mod noether;
pub mod tensor;
pub mod transform;

pub use error::{FinslerError, Result};
