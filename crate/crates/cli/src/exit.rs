use std::fmt;
use std::process::ExitCode;

use orbit_bosonizer::Error;

/// Why a run stopped early, and the exit code that goes with it.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs: exit 2.
    Usage(String),
    /// Numerical failure, non-finite output or I/O: exit 1.
    Numeric(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Failure::Numeric(msg.into())
    }

    pub fn code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(2),
            Failure::Numeric(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numeric(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("I/O: {e}"))
    }
}
