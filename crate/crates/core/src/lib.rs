//! Levy alpha-stable distributions for return-series analysis.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod estimator;
pub mod market;
pub mod output;
pub mod params;
pub mod sampler;

pub use error::{Result, StableError};
pub use params::{beta_from_tails, char_fn, make_params, tail_exponent, StableParams, TailCoefficients};
