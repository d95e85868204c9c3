//! Item response theory scoring for benchmark evaluations.
//!
//! Items follow the three-parameter logistic model (2PL when the lower asymptote
//! is zero) or the generalized partial credit model, on a θ scale clamped to
//! `[-6, 6]`. The crate covers:
//!
//! - [`model`]: response probabilities, likelihoods and information;
//! - [`estimation`]: maximum-likelihood θ, inverse-variance combination, scaling;
//! - [`calibration`]: marginal maximum likelihood item calibration by EM;
//! - [`simulation`]: seeded synthetic responses and recovery studies;
//! - [`harness`]: item banks, raw records, scoring and the scoring pipeline;
//! - [`report`]: population summaries, rankings and plot data.
//!
//! Batch work runs on rayon when the `parallel` feature is enabled (the default);
//! [`Execution::Sequential`] forces a single thread and produces identical results.

pub mod calibration;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod fixtures;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod numeric;
pub mod quadrature;
pub mod report;
pub mod simulation;

pub use error::{Error, Result};
pub use exec::Execution;
