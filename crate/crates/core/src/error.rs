use thiserror::Error;

/// Errors surfaced by table construction, parameter selection and the
/// batch-code layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("duplicate item identifiers")]
    DuplicateIds,

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance too large for exhaustive search: n = {n}, guard = {guard}")]
    SizeGuard { n: usize, guard: usize },

    #[error("decode error: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
