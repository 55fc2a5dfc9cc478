//! Experiment runner around `geneo-core`: configuration, Matrix Market and
//! CSV exchange, parallel sweeps and the stage commands of the `geneo` CLI.

pub mod config;
pub mod csvout;
pub mod error;
pub mod mtx;
pub mod pipeline;
pub mod stages;

pub use config::ExperimentConfig;
pub use error::ToolError;
