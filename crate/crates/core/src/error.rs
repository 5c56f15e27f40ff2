use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid mode data: {0}")]
    InvalidModes(String),

    #[error("quantity is undefined: {0}")]
    Undefined(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite state at step {step} (t = {t})")]
    BlowUp { step: u64, t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed record file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
