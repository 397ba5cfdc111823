use thiserror::Error;

/// Errors produced by the rnapars library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("illegal character {ch:?} at position {position}")]
    IllegalCharacter { ch: char, position: usize },
    #[error("pseudoknot bracket {ch:?} at position {position} is not supported")]
    PseudoknotBracket { ch: char, position: usize },
    #[error("unbalanced parenthesis at position {position}")]
    Unbalanced { position: usize },
    #[error("invalid secondary structure: {0}")]
    InvalidStructure(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("leafset mismatch: [{}, {}] vs [{}, {}]", left.0, left.1, right.0, right.1)]
    LeafsetMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("conflicting leafsets: {0}")]
    Conflict(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{what} exceeds cap ({value} > {cap})")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("leaf ids do not match: missing structures for [{}], unknown ids [{}]", missing.join(", "), extra.join(", "))]
    LeafIdMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error in {format} at line {line}, column {column}: {message}")]
    Parse {
        format: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }

    pub(crate) fn parse(
        format: &'static str,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            format,
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
