//! Configuration, content-addressed run directories and the experiment
//! pipelines behind the `wildlab` command line.

mod config;
mod pipeline;
mod render;

pub use config::{
    BudgetSection, ExperimentConfig, GridSection, InitialSection, OutputSection, PressureSection,
    ProfileSection, WaveSection, WindowSection,
};
pub use pipeline::{
    run_command, BudgetRunReport, CertifyRunReport, Command, Outcome, ReportHeader, RunDir,
    RunOptions, SolveRunReport, SolveSummary, Status, WaveVerdict, WindowRunReport,
    FORMAT_VERSION,
};
pub use render::{flatten_json, render_run_dir};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("missing input: {0}")]
    Missing(String),
}

impl ConfigError {
    pub fn class(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "config.parse",
            ConfigError::Invalid(_) => "config.invalid",
            ConfigError::Missing(_) => "config.missing",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Output(String),
}

impl RunError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable error class.
    pub fn class(&self) -> &'static str {
        match self {
            RunError::Config(c) => c.class(),
            RunError::Io { .. } => "io",
            RunError::Numerical(_) => "numerical",
            RunError::Output(_) => "io.format",
        }
    }

    /// Process exit code: 2 for configuration and I/O problems, 3 for
    /// numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical(_) => 3,
            _ => 2,
        }
    }
}
