use thiserror::Error;

/// Errors produced by the dimer toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown unit tag `{0}` (expected one of: si, cgs, mub-fu-oe)")]
    UnknownUnit(String),

    /// Normalized moment outside the physical range [0, 4/3].
    #[error("unphysical normalized moment x = {x} (allowed range [0, 4/3])")]
    Unphysical { x: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
