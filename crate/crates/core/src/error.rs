use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {position} near `{near}`: {message}")]
    Syntax {
        position: usize,
        near: String,
        message: String,
    },
    #[error("cannot resolve {0}")]
    Unresolved(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown database `{0}`")]
    UnknownDatabase(String),
    #[error("query is not explainable: join condition `{0}` is not a primary/foreign key link")]
    NotExplainable(String),
    #[error("malformed template `{key}`: {message}")]
    MalformedTemplate { key: String, message: String },
    #[error("duplicate template key `{0}`")]
    DuplicateTemplate(String),
    #[error("queries belong to different databases (`{0}` vs `{1}`)")]
    SchemaMismatch(String, String),
    #[error("length mismatch: {0} predictions for {1} gold queries")]
    LengthMismatch(usize, usize),
    #[error("beam has {found} candidate(s), need at least {needed}")]
    BeamTooSmall { found: usize, needed: usize },
    #[error("invalid beam: {0}")]
    InvalidBeam(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid record {record}: {reason}")]
    InvalidRecord { record: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Stable machine-readable code, used in service error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax_error",
            Error::Unresolved(_) => "unresolved_reference",
            Error::Unsupported(_) => "unsupported_construct",
            Error::InvalidSchema(_) => "invalid_schema",
            Error::UnknownDatabase(_) => "unknown_database",
            Error::NotExplainable(_) => "non_explainable",
            Error::MalformedTemplate { .. } => "malformed_template",
            Error::DuplicateTemplate(_) => "duplicate_template",
            Error::SchemaMismatch(..) => "schema_mismatch",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::BeamTooSmall { .. } => "beam_too_small",
            Error::InvalidBeam(_) => "invalid_beam",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidRecord { .. } => "invalid_record",
            Error::Io { .. } => "io_error",
            Error::Json(_) => "invalid_json",
        }
    }
}
