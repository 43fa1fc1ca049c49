//! Command-line driver: one TOML config feeds every verb, command-line flags
//! override single entries, and every artifact is stamped with the config
//! digest and seed.

use std::path::PathBuf;

use pubweight::analysis::AnalysisError;
use pubweight::engine::EngineError;
use pubweight::model::{ValidationErrors, Violation};
use pubweight::SolverError;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::dispatch;
pub use config::{ConfigFile, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Validation(ValidationErrors),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }

    pub(crate) fn mode(message: String) -> Self {
        CliError::Validation(ValidationErrors(vec![Violation {
            tag: "MODE".into(),
            message,
        }]))
    }
}

impl From<ValidationErrors> for CliError {
    fn from(e: ValidationErrors) -> Self {
        CliError::Validation(e)
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::WrongMode { .. } => CliError::mode(e.to_string()),
            SolverError::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::StepCap { .. }
            | EngineError::NoSteps
            | EngineError::GroupSizeOutOfRange { .. }
            | EngineError::IndexOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Simulate,
    SolveDiscrete,
    SolveContinuous,
    Compare,
    InclusionCheck,
    Validate,
}

/// Overrides of the `[inclusion]` section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InclusionOverrides {
    pub weights: Option<Vec<u64>>,
    pub k: Option<usize>,
    pub draws: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub verb: Verb,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
    pub inclusion: InclusionOverrides,
}
