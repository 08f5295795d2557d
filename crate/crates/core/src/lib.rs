//! Numerical checks and constants for functional inequalities on
//! homogeneous groups.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod group;
pub mod hardy;
pub mod inequalities;
pub mod kernels;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod trial;
pub mod trudinger;

pub use error::{Error, Result};
