use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input out of domain: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid medium: {0}")]
    Medium(String),

    #[error("time stepping became unstable at step {step}")]
    Unstable { step: usize },

    #[error("region `{0}` contains no grid node")]
    EmptyRegion(String),

    #[error("bad magic bytes in record file")]
    BadMagic,

    #[error("record file truncated: {0}")]
    Truncated(String),

    #[error("record payload size mismatch: header implies {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("malformed record header: {0}")]
    Header(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short category tag, used for exit-code mapping by front ends.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::Medium(_) => "medium",
            Error::Unstable { .. } => "unstable",
            Error::EmptyRegion(_) => "region",
            Error::BadMagic | Error::Truncated(_) | Error::SizeMismatch { .. } | Error::Header(_) => {
                "format"
            }
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
