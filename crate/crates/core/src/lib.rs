//! Local-projection IV impulse responses with quasi-Bayesian smoothing.
//!
//! The pipeline runs dataset → design → moment model → Gibbs chain →
//! sandwich covariance → pointwise and sup-t bands. Supporting modules build
//! weather instruments, run design diagnostics and Monte Carlo studies.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod rng;

pub mod dataset;
pub mod design;
pub mod gmm;
pub mod prior;
pub mod sampler;
pub mod inference;
pub mod estimate;
pub mod simulate;
pub mod instruments;
pub mod diagnostics;
pub mod synthetic;
pub mod config;
pub mod commands;

pub use error::{Error, Result};
