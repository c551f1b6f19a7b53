//! Matrix-free discontinuous Galerkin solver for two-dimensional moist
//! compressible flow with warm-rain microphysics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dg;
pub mod driver;
pub mod error;
pub mod init;
pub mod microphysics;
pub mod model;
pub mod thermo;
pub mod timestep;

pub use error::{Error, Result};
