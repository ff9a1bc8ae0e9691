//! Regression and inference engine: OLS with exact finite-sample theory,
//! sandwich covariances, ridge/lasso, GLM and GEE, quantile regression and
//! survival analysis.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod gee;
pub mod glm;
pub mod linalg;
pub mod ols;
pub mod quantile;
pub mod robust;
pub mod rng;
pub mod shrinkage;
pub mod simulate;
pub mod survival;

pub use error::{Error, Result};
