use thiserror::Error;

/// Errors raised by the decomposition pipelines.
///
/// The variants are grouped the way callers usually need to react: bad input
/// (`Shape`, `Data`, `Format`, `Io`), numerically ill-posed problems
/// (`Conditioning`, `RankZero`, `Domain`), and failures of the dense backend.
#[derive(Debug, Error)]
pub enum DmdError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("conditioning error: {what} (value {value:e})")]
    Conditioning { what: String, value: f64 },

    #[error("rank-zero input: {0}")]
    RankZero(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),
}

impl DmdError {
    pub(crate) fn conditioning(what: impl Into<String>, value: f64) -> Self {
        DmdError::Conditioning {
            what: what.into(),
            value,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            DmdError::Conditioning { .. } | DmdError::RankZero(_) | DmdError::Domain(_) => 3,
            DmdError::Backend(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, DmdError>;
