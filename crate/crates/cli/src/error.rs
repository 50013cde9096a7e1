use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {}", path.display())]
    Write { path: PathBuf, source: io::Error },

    /// Malformed JSON or a schema violation; the message names the field.
    #[error("invalid JSON in {}", path.display())]
    Schema {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("initial condition is not convex: smallest Hessian eigenvalue {eig_min:e} at {point:?}")]
    NotConvex { eig_min: f64, point: Vec<f64> },

    #[error(transparent)]
    Numerical(#[from] calabi_core::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        use calabi_core::Error as Core;
        match self {
            Error::Read { .. } | Error::Write { .. } => EXIT_IO,
            Error::Schema { .. } | Error::Invalid(_) => EXIT_USAGE,
            Error::NotConvex { .. } => EXIT_NUMERICAL,
            Error::Numerical(Core::InvalidGrid(_) | Core::InvalidArgument(_)) => EXIT_USAGE,
            Error::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
