use std::fmt;
use std::path::Path;

use gpcid_core::Error;

/// Process exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Process exit code for numeric and fitting failures.
pub const EXIT_NUMERIC: i32 = 1;

/// A failed command with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    /// Reading or writing `path` failed.
    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ParameterDomain(_) | Error::InvalidArgument(_) | Error::Parse(_) | Error::Io(_) | Error::Csv(_) => {
                EXIT_USAGE
            }
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;
