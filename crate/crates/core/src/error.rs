use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no training shots with prepared bit {bit} for qubit {qubit}")]
    ClassMissing { qubit: usize, bit: u8 },

    #[error("degenerate templates for qubit {qubit}: class means are identical")]
    DegenerateTemplate { qubit: usize },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("insufficient shots for victim preparation {victim}: have {have}, need {need}")]
    InsufficientShots {
        victim: String,
        have: usize,
        need: usize,
    },

    #[error("no qualifying shots: every shot had a non-zero attacker preparation")]
    NoQualifyingShots,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("bad trace file: {0}")]
    Format(String),

    #[error("trace file truncated at byte offset {offset}")]
    Truncated { offset: u64 },

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical or I/O
    /// failures at run time.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NonFiniteLoss { .. } | Error::Io(_))
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            other => Error::Csv {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}
