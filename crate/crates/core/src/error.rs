use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum CccdError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density spec field `{field}`: {reason}")]
    Spec { field: String, reason: String },

    #[error("`{what}` = {value} is outside {allowed}")]
    OutOfRange {
        what: &'static str,
        value: String,
        allowed: String,
    },

    #[error("tie between values {a} and {b}; resample the data")]
    Tie { a: f64, b: f64 },

    #[error("non-finite coordinate {0}")]
    NonFinite(f64),

    #[error("at least one anchor is required")]
    NoAnchors,

    #[error("{0}")]
    Unsupported(String),

    #[error("no closed form for {family}; use quadrature instead")]
    NoClosedForm { family: String },

    #[error("quadrature did not converge: estimate {estimate} with error bound {error_bound} after {panels} panels")]
    NotConverged {
        estimate: f64,
        error_bound: f64,
        panels: usize,
    },

    #[error("limit did not stabilise; last ratio {last}")]
    LimitUnstable { last: f64 },

    #[error("tie resampling gave up after {attempts} attempts")]
    TooManyTies { attempts: usize },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CccdError>;

impl CccdError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CccdError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn range(what: &'static str, value: impl ToString, allowed: impl Into<String>) -> Self {
        CccdError::OutOfRange {
            what,
            value: value.to_string(),
            allowed: allowed.into(),
        }
    }
}
