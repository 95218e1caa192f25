use std::path::PathBuf;

/// Failures reading or writing the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, {field}: {message}")]
    Parse { line: usize, field: String, message: String },
    #[error("unsupported genome format version '{found}' (expected {expected})")]
    Version { found: String, expected: u32 },
    #[error("row {row}, column {column}: {message}")]
    Cell { row: usize, column: String, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("no data rows")]
    Empty,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] qcs_core::Error),
}

impl FormatError {
    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl Into<String>) -> FormatError {
        FormatError::Parse { line, field: field.into(), message: message.into() }
    }

    pub(crate) fn cell(row: usize, column: impl Into<String>, message: impl Into<String>) -> FormatError {
        FormatError::Cell { row, column: column.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> FormatError {
        let path = path.into();
        move |source| FormatError::Io { path, source }
    }
}
