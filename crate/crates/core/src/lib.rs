//! Fairness-aware outlier detection with an autoencoder base detector.
//!
//! The crate trains a reconstruction-error detector, retrains it under
//! statistical-parity and group-fidelity regularization, scores the result
//! with label-free and supervised fairness measures, and checks two
//! base-rate impossibility results by exhaustive enumeration.

pub mod claimcheck;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod evalmetrics;
pub mod losses;
pub mod numgrad;
pub mod training;

pub use error::{Error, Result};
