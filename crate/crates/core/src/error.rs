use std::path::PathBuf;

/// Errors produced by the wstx library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter combination that can never produce a valid transform.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input dimensions incompatible with the configured transform.
    #[error("size error: {0}")]
    Size(String),

    /// Malformed input samples (NaN/Inf, wrong rate, wrong duration).
    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("training error: {0}")]
    Training(String),

    /// The loss became non-finite; carries the last parameters with a finite loss.
    #[error("training diverged at epoch {epoch}")]
    Divergence {
        epoch: usize,
        last_stable: Box<crate::classifier::LinearHead>,
    },

    /// Caller violated an interface contract (e.g. width mismatch).
    #[error("contract error: {0}")]
    Contract(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("oracle budget exceeded: {0}")]
    Budget(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
