//! Run orchestration, results store and reporting behind the `spacedrl`
//! binary.

pub mod config;
pub mod report;
pub mod run;
pub mod store;
pub mod svg;

use std::path::PathBuf;

use thiserror::Error;

use spacedrl_core::experiments::ExperimentError;

pub use config::{parse_seeds, Experiment, RunConfig};
pub use report::cmd_report;
pub use run::{cmd_run, RunOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed results in {path}: {msg}")]
    Results { path: PathBuf, msg: String },
    #[error("incompatible results: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Incompatible(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        CliError::Csv {
            path: path.into(),
            source,
        }
    }
}
