//! Error types shared across the crate.

use thiserror::Error;

/// Coarse error category, used by callers that map failures onto
/// process exit codes or HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: unknown name, violated precondition, domain error.
    Precondition,
    /// A trajectory blew up or produced non-finite values.
    Divergence,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unknown method `{name}`; valid methods: {valid}")]
    UnknownMethod { name: String, valid: String },

    #[error("unknown model `{name}`; valid models: {valid}")]
    UnknownModel { name: String, valid: String },

    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    Precondition(String),

    #[error("divergence at step {step}{}: {detail}", stage.map(|s| format!(", stage {s}")).unwrap_or_default())]
    Divergence {
        step: usize,
        stage: Option<usize>,
        detail: String,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Divergence { .. } => ErrorKind::Divergence,
            _ => ErrorKind::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
