use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration has {got} components, robot expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("no valid sample found after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("agent {agent}: {which} configuration could not be connected to the roadmap")]
    DisconnectedEndpoint { agent: usize, which: &'static str },

    #[error("joint state space of {states} states exceeds the bound of {bound}")]
    StateBoundExceeded { states: u128, bound: u128 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
