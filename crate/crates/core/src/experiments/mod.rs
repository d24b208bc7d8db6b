//! Experiment harness: config ingestion, problem presets, convergence,
//! drift and comparison studies, CSV emission and reference caching.

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;
pub mod reference;

use std::path::PathBuf;

pub use commands::{
    cmd_compare, cmd_converge, cmd_drift, cmd_reference, cmd_run, stability_probe, CompareRow,
    ConvergeRow, DriftSummary, StabilityReport,
};
pub use config::{load_config, ConfigError, ExperimentConfig, GridSpec, InitialDatum, Problem};
pub use reference::{CacheStatus, ReferenceCache};

use crate::integrator::IntegratorError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(
        "no cached reference solution for {problem} (key {key}); run the `reference` command first"
    )]
    MissingReference { problem: Problem, key: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit code: 1 usage/config, 2 divergence, 3 missing reference.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Integrator(IntegratorError::Divergence { .. }) => 2,
            ExperimentError::MissingReference { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }
}
