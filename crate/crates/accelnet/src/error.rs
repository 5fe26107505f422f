use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] accelnet_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
