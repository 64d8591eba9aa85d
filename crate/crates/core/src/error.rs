use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, grids or bases that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Non-finite state or unstable step, with the time it was detected at.
    #[error("integration error at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
