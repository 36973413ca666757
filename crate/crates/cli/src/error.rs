use std::fmt;

use thiserror::Error;

use crate::config::FieldError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", list(.0))]
    Config(Vec<FieldError>),

    #[error(transparent)]
    Core(#[from] paraweight::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn list(errs: &[FieldError]) -> String {
    errs.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn field(field: &str, message: impl fmt::Display) -> Self {
        CliError::Config(vec![FieldError { field: field.to_string(), message: message.to_string() }])
    }

    /// Process exit status: 2 for configuration errors, 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }
}
