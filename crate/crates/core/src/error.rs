use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters that cannot describe a valid environment, class or run.
    #[error("configuration error: {0}")]
    Config(String),
    /// A value outside the domain of an operation (unreachable feedback, bad index, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller-side contract violation, e.g. an empty dataset.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Degenerate input to a constructor.
    #[error("construction error: {0}")]
    Construction(String),
    /// A loaded or constructed object violates a structural invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
