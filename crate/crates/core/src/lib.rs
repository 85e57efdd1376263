//! Skewness–kurtosis analysis of grouped size data.
//!
//! * [`ingest`]: grouped CSV input and the shipped province summary.
//! * [`moments`]: central moments, summaries and per-group (S, K) points.
//! * [`ksfit`]: `K = p S^ν + q` fits.
//! * [`ranksize`]: ascending rank-size models and their fits.
//! * [`beta`]: Beta special functions, moment calibration and urn limit laws.
//! * [`urnsim`]: Polya urn simulation with new-urn creation.
//! * [`cli`]: the `skewkurt` command line.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod ksfit;
mod lsq;
pub mod moments;
pub mod ranksize;
pub mod report;
pub mod synth;
pub mod urnsim;

pub use error::{Error, Result};
