use std::fmt;

use aip_core::Error;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    User = 1,
    Internal = 2,
    Partial = 3,
}

/// A one-line diagnostic with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn user(message: impl Into<String>) -> Self {
        Self { status: Status::User, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn status_of(e: &Error) -> Status {
    match e {
        Error::NonFinite(_) => Status::Internal,
        _ => Status::User,
    }
}

/// Attaches the flag or file a library error concerns.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, Error> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError { status: status_of(&e), message: format!("{what}: {e}") })
    }
}

impl<T> Context<T> for Result<T, std::io::Error> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::user(format!("{what}: {e}")))
    }
}

impl<T> Context<T> for Result<T, serde_json::Error> {
    fn context(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::user(format!("{what}: {e}")))
    }
}
