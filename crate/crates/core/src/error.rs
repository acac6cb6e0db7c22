use thiserror::Error;

/// Errors raised by model construction and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("model provides tail constants only; {0} needs a spectral density")]
    TailOnlyModel(&'static str),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric/Hermitian at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min:e}, largest {max:e}")]
    Indefinite { min: f64, max: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("invalid model document: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
