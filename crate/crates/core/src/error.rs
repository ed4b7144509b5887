use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a numerical routine.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration or input that violates a model invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// The Foldy-Lax system is singular at this configuration.
    #[error("multiple-scattering system is singular (condition estimate {condition:.3e})")]
    Resonance { condition: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for this error class: 1 validation, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Invalid(_) | Error::Shape { .. } | Error::Parse { .. } => 1,
            Error::Io { .. } => 2,
            Error::Resonance { .. } | Error::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
