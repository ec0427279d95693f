use std::path::PathBuf;

/// Errors raised across the crate. Each variant maps to one diagnostic class
/// reported by the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The kriging covariance could not be factorized even at maximal jitter.
    #[error("conditioning failure: {0}")]
    Conditioning(String),

    /// An iterative fit hit its iteration cap.
    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    Convergence { iterations: usize, gradient_norm: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
