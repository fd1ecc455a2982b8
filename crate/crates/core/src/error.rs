use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("data: {0}")]
    Data(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure originates from input data rather than from
    /// configuration or internal logic.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) | Error::Schema(_) | Error::Data(_) => {
                true
            }
            Error::InvalidParam(_) => false,
            Error::Stage { source, .. } => source.is_data_error(),
        }
    }
}

/// Attach the pipeline stage name to an error.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
