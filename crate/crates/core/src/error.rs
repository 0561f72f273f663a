use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the tomography pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not unitary: deviation {deviation:e} exceeds tolerance {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("unknown gate `{0}` (expected identity, hadamard4 or fourier)")]
    UnknownGate(String),

    #[error("cannot project onto the unitaries: smallest singular value {0:e} is below 1e-12")]
    Projection(f64),

    #[error("invalid form: {0}")]
    InvalidForm(String),

    #[error("cannot compose forms: {0}")]
    Composition(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("fringe fit failed: {0}")]
    Fit(String),

    #[error("nonphysical visibility {visibility} for setting {setting_id} (tolerance {tol})")]
    NonphysicalVisibility {
        setting_id: usize,
        visibility: f64,
        tol: f64,
    },

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
