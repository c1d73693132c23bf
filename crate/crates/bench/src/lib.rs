//! Experiment harness for the `rvmrls` filters: TOML-configured runs over
//! scenarios, algorithms and seeds, CSV outputs and comparison tables.

pub mod config;
pub mod experiment;
pub mod output;
pub mod table;

pub use config::ExperimentConfig;
pub use experiment::{run_experiments, run_matrix, RunManifest, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
