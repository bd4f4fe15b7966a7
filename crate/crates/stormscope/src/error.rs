use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic at offset 0: expected \"FPK1\"")]
    BadMagic,
    #[error("truncated header at offset {offset}: {detail}")]
    TruncatedHeader { offset: u64, detail: String },
    #[error("invalid header at offset {offset}: {detail}")]
    Header { offset: u64, detail: String },
    #[error("truncated payload at offset {offset}: expected {expected} payload bytes, found {found}")]
    TruncatedPayload { offset: u64, expected: u64, found: u64 },
    #[error("trailing bytes at offset {offset}")]
    TrailingBytes { offset: u64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("xml at {position}: {detail}")]
    Xml { position: String, detail: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] stormscope_core::Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
