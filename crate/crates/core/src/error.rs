use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("event index {got} is not after the previous index {last}")]
    OutOfOrder { last: u64, got: u64 },

    #[error("share has no simulation time; this method needs wall-clock time")]
    MissingTime,

    #[error("schedule changed (p or B) but the engine was not configured for varying schedules")]
    NonConstantSchedule,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("line {line}: {message}")]
    Replay { line: usize, message: String },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
