use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A document or record failed validation. `path` locates the offending field.
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },

    #[error("assembly error: {0}")]
    Assembly(String),

    /// The optimizer stopped without meeting its convergence criterion.
    #[error("estimation failed for {taker_id}: {message} (last iterate {last_iterate})")]
    Estimation {
        taker_id: String,
        message: String,
        last_iterate: f64,
    },

    #[error("pipeline error for {taker_id}: {message}")]
    Pipeline { taker_id: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent input documents.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::Contract(_)
                | Error::Domain(_)
                | Error::Assembly(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }

    /// True for errors raised by the numerical estimation routines.
    pub fn is_estimation(&self) -> bool {
        matches!(self, Error::Estimation { .. } | Error::Pipeline { .. })
    }
}
