use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Syntax error in one of the text formats, with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn on_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }

    pub(crate) fn shifted(mut self, columns: usize) -> Self {
        self.column += columns;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("{path}: parse error in record {record}: {source}")]
    Record {
        path: PathBuf,
        record: usize,
        source: ParseError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("Q table has no entry for Q{0}")]
    MissingQ(u32),

    #[error(
        "stage {stage}: record {record} needs more than {cap} live terms (raise --memory-term-cap)"
    )]
    TermCapExceeded {
        stage: u32,
        record: usize,
        cap: usize,
    },

    #[error("stage {stage}: record {record} is not a monomial of the expected shape: {message}")]
    BadRecord {
        stage: u32,
        record: usize,
        message: String,
    },

    #[error("no numeric value bound for symbol `{0}`")]
    UnboundSymbol(String),

    #[error("letter {letter} is not one of the {drivers} drivers")]
    InvalidLetter { letter: u16, drivers: usize },

    #[error("shuffle multiplicity overflow")]
    Overflow,

    #[error("Picard iteration count must be at least 1")]
    NoIterations,

    #[error("worker thread panicked")]
    WorkerPanic,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn with_path(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn with_path(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
