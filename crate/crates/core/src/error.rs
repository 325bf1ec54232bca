use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("term `{0}` has no tokens after normalization")]
    EmptyTerm(String),

    #[error("term `{0}` has an empty code")]
    EmptyCode(String),

    #[error("no sources: at least one corpus or term list is required")]
    NoSources,

    #[error("key `{0}` not found in the frequency table")]
    MissingKey(String),

    #[error("abbreviation line {line}: {message}")]
    Abbreviation { line: usize, message: String },

    #[error("row {row}: column `{column}` has invalid value `{value}`")]
    InvalidField {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown match technique `{0}`")]
    UnknownTechnique(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            source,
        }
    }
}
