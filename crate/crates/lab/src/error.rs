use std::path::PathBuf;

/// Everything a run can fail with, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("expression error at byte {pos}: {msg}")]
    Expr { pos: usize, msg: String },
    #[error("{0}")]
    Core(#[from] freebound::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad FBGF file: {0}")]
    Format(String),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("outputs of repeated runs differ: {0}")]
    Nondeterministic(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    /// 3 for solver divergence, 1 for I/O trouble, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(freebound::Error::Divergence { .. }) => 3,
            LabError::Io { .. } => 1,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
