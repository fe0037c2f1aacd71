//! Experiment runner: configuration schema, presets and report assembly.

pub mod config;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, PastSpec, SamplerSpec, SCHEMA_VERSION};
pub use report::{Report, RunMetadata};
pub use runner::{run_config, Overrides, RunOptions};
