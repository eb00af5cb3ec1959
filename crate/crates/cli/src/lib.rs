//! Driver for mlkit pipelines and desk-scale scaling experiments.
//!
//! The `mlkit` binary exposes four subcommands (`logistic`, `als`,
//! `cluster-text`, `scaling`) whose settings come from flags layered over an
//! optional `key=value` config file; see [`config::Settings`].

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, Mode, Scaling, Settings};
pub use experiments::{run_scaling, run_text_pipeline, TextClusters};
pub use mlkit::datagen;
pub use report::{ScalingReport, ScalingRow};
