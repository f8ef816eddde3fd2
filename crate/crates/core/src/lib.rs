//! Skewed and heavy-tailed Lambert W x F distributions.
//!
//! The crate is organised bottom-up:
//!
//! * [`lambert`] evaluates both real branches of the Lambert W function and the
//!   elementary skew (`u * exp(gamma * u)`) and heavy-tail (`u * exp(delta * u^2 / 2)`)
//!   transforms built on it.
//! * [`distributions`] defines the Lambert W x F family for normal, Student-t,
//!   Cauchy and exponential inputs, in both the mean-variance and the unrestricted
//!   location-scale parametrisation.
//! * [`estimators`] contains the iterative generalized method of moments (IGMM)
//!   and maximum likelihood estimation.
//! * [`tail`] and [`resampling`] hold the tail-index and bootstrap/whiteness
//!   diagnostics used to decide which tail regime a sample lives in.

// NaN-rejecting comparisons such as `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod lambert;
pub mod optim;
pub mod resampling;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
