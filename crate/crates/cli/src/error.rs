use std::fmt;

use cortexforge::Error;

/// Exit status for bad input, a bad flag or an unusable config.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when an algorithm cannot produce a valid result.
pub const EXIT_ALGORITHM: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn algorithm(message: impl Into<String>) -> Self {
        CliError { code: EXIT_ALGORITHM, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Topology(_) | Error::EmptySurface(_) | Error::DegenerateVertex(_) | Error::Geometry(_) => {
                CliError::algorithm(message)
            }
            Error::Io { .. }
            | Error::Format(_)
            | Error::Unsupported(_)
            | Error::Dimensionality(_)
            | Error::Kind { .. }
            | Error::Precondition(_)
            | Error::Config(_)
            | Error::Contract(_) => CliError::usage(message),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
