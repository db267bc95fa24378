use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent grid, shape or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Field has the wrong number of components.
    #[error("shape error: expected {expected} component(s), found {found}")]
    Shape { expected: usize, found: usize },

    /// Argument outside the domain of an operator (negative exponent, bad block index, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant was violated (g < 1, non-monotone profile, ...).
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fit error: {0}")]
    Fit(String),

    /// Non-finite or over-threshold values; the run halts rather than failing.
    #[error("blow-up detected: {0}")]
    BlowUp(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
