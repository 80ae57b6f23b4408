//! Noise-robust UPDRS regression through contrastive feature augmentation.
//!
//! A single speech feature is binned; an encoder `H = tanh(XW)` is trained so
//! that samples from the same bin share a direction in the encoded space; the
//! downstream regressors then see `[X | H]` instead of `X`. The crate also
//! carries everything needed to measure the effect: SNR-calibrated noise,
//! a small suite of regressors, and the evaluation harness.

pub mod binning;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod noise;
pub mod regressors;
pub mod seed;
pub mod selection;
pub mod tree;

pub use error::{Error, Result};
