use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad user input; exit code 2.
    Validation(String),
    /// A numerical procedure failed; exit code 3.
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<kljn_core::Error> for CliError {
    fn from(e: kljn_core::Error) -> Self {
        if e.is_numeric_failure() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
