//! CLI error classification onto process exit codes.

use std::fmt;

use igchaos_core::Error as CoreError;

use crate::config::ConfigError;

/// Top-level CLI error. The variant fixes the process exit code:
/// validation 1, numerical failure 2, verification failure 3.
#[derive(Debug, Clone)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    /// Splits core errors into input/validation problems versus genuine
    /// numerical failures.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::QuadratureNotConverged { .. }
            | CoreError::NewtonDidNotConverge { .. }
            | CoreError::StepSizeUnderflow { .. }
            | CoreError::MaxStepsExceeded { .. }
            | CoreError::NonPositiveIntensity { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.0)
    }
}
