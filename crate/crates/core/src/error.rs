use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("grid index {index} out of range (path has {n_steps} steps)")]
    IndexOutOfRange { index: usize, n_steps: usize },

    #[error("integrand has {len} entries but {needed} are required")]
    LengthMismatch { len: usize, needed: usize },

    /// Estimator or study configuration that cannot be run as given.
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("not enough samples: {got} given, at least {need} required")]
    TooFewSamples { got: usize, need: usize },

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
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than
    /// by the environment.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. }
                | Error::IndexOutOfRange { .. }
                | Error::LengthMismatch { .. }
                | Error::Config { .. }
                | Error::TooFewSamples { .. }
        )
    }
}
