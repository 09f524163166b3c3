use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("{source_name}, line {line}: {msg}")]
    Dataset {
        source_name: String,
        line: u64,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] avagrad_core::Error),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        LabError::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
