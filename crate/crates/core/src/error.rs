use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("expected a 3D volume, found {0} dimensions")]
    Dimensionality(usize),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("wrong grid kind: expected {expected}, found {found}")]
    Kind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("empty surface: {0}")]
    EmptySurface(String),

    #[error("degenerate vertex {0}: zero-area umbrella")]
    DegenerateVertex(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violated: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
