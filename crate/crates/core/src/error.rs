use thiserror::Error;

/// Errors raised by operator construction and the verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("leg index {slot} out of range for {legs} legs")]
    SlotOutOfRange { slot: usize, legs: usize },

    #[error("leg index {0} listed more than once")]
    DuplicateSlot(usize),

    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("series does not converge: {0}")]
    Divergent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
