use thiserror::Error;

use crate::scalar::RingSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed scalar {text:?}: {reason}")]
    MalformedScalar { text: String, reason: String },

    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),

    #[error("ring mismatch: expected {expected}, found {found}")]
    RingMismatch { expected: RingSpec, found: RingSpec },

    #[error("invalid ring: {0}")]
    InvalidRing(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("enumeration of {requested} items exceeds cap {cap}")]
    CapExceeded { requested: u128, cap: u128 },

    #[error("{0}")]
    Json(String),

    /// An identity that must hold by construction failed; carries the
    /// counterexample description.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}
