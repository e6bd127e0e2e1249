use std::path::PathBuf;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("not a git repository: {0}")]
    NotARepository(String),

    #[error("git {command} failed: {message}")]
    Git { command: String, message: String },

    #[error("unknown tag '{0}'")]
    UnknownTag(String),

    #[error("unknown scope '{0}'")]
    UnknownScope(String),

    #[error("variant mismatch: {0} vs {1}")]
    VariantMismatch(&'static str, &'static str),

    #[error("snapshot not cached: {repo_id} @ {tag}")]
    SnapshotNotCached { repo_id: String, tag: String },

    #[error("repository not cached: {0}")]
    RepoNotCached(String),

    #[error("schema mismatch in {path}: found version {found}, expected {expected}")]
    SchemaMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("corrupt payload in {path}: {message}")]
    CorruptPayload { path: PathBuf, message: String },

    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
