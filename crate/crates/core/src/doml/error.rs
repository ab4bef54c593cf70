use std::path::PathBuf;

use thiserror::Error;

/// Parse failure. Every variant carries a 1-based line/column.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomlError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: duplicate {kind} `{name}`")]
    Duplicate {
        line: usize,
        column: usize,
        kind: String,
        name: String,
    },
    #[error("{line}:{column}: malformed requirement `{id}`: {message}")]
    MalformedRequirement {
        line: usize,
        column: usize,
        id: String,
        message: String,
    },
    #[error("{line}:{column}: invalid objective: {message}")]
    InvalidObjective {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unresolved {kind} reference `{name}`")]
    Unresolved {
        line: usize,
        column: usize,
        kind: String,
        name: String,
    },
}

impl DomlError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        DomlError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn position(&self) -> (usize, usize) {
        match self {
            DomlError::Syntax { line, column, .. }
            | DomlError::Duplicate { line, column, .. }
            | DomlError::MalformedRequirement { line, column, .. }
            | DomlError::InvalidObjective { line, column, .. }
            | DomlError::Unresolved { line, column, .. } => (*line, *column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error("document has no optimization layer")]
    NoOptimizationLayer,
    #[error("solution `{name}` has {got} objective values but {expected} objectives are declared")]
    ObjectiveCountMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("solution `{name}` reports objective `{got}` where `{expected}` is declared")]
    ObjectiveMismatch {
        name: String,
        expected: String,
        got: String,
    },
    #[error("a solution named `{0}` already exists in the optimization layer")]
    NameClash(String),
    #[error("decision `{0}` is not in the catalogue")]
    UnknownElement(String),
    #[error("invalid unit label `{0}`: must be an identifier or one of % $ € £")]
    InvalidUnit(String),
}

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot open archive {path}: {message}")]
    Zip { path: PathBuf, message: String },
    #[error("archive {path} contains no .doml entry")]
    NoDomlEntry { path: PathBuf },
    #[error("archive {path} contains several .doml entries: {entries:?}")]
    AmbiguousDomlEntries { path: PathBuf, entries: Vec<String> },
    #[error("{path}: input is not valid UTF-8")]
    NotUtf8 { path: PathBuf },
}
