//! Experiment orchestration behind the `noro` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_evaluate, cmd_ingest, cmd_report, cmd_select_features, cmd_synth, cmd_train_encoder};
pub use config::ExperimentConfig;
