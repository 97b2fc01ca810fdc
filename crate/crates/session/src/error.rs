use rulelab_core::{EditError, InductionError, IngestError, RuleError};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("induction failed: {0}")]
    Induction(InductionError),
    #[error("rule edit rejected: {0}")]
    Edit(#[from] EditError),
    #[error("invalid ruleset: {0}")]
    InvalidRules(#[from] RuleError),
    #[error("no manual labels; label at least one image first")]
    NoLabels,
    #[error("unknown image `{0}`")]
    UnknownImage(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("session `{0}` is busy with another change")]
    Busy(String),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("event {seq} could not be replayed: {reason}")]
    Replay { seq: u64, reason: String },
}

impl From<InductionError> for SessionError {
    fn from(e: InductionError) -> Self {
        match e {
            InductionError::NoLabels => SessionError::NoLabels,
            InductionError::UnknownImage(id) => SessionError::UnknownImage(id),
            InductionError::UnknownClass { label, .. } => SessionError::UnknownClass(label),
            other => SessionError::Induction(other),
        }
    }
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for SessionError {
    fn from(e: serde_json::Error) -> Self {
        SessionError::Storage(e.to_string())
    }
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Ingest(e) => e.code(),
            SessionError::Induction(_) => "induction_error",
            SessionError::Edit(_) => "edit_rejected",
            SessionError::InvalidRules(_) => "invalid_rules",
            SessionError::NoLabels => "no_labels",
            SessionError::UnknownImage(_) => "unknown_image",
            SessionError::UnknownClass(_) => "unknown_class",
            SessionError::UnknownSession(_) => "unknown_session",
            SessionError::Validation(_) => "validation_error",
            SessionError::Busy(_) => "conflict",
            SessionError::Storage(_) => "storage_error",
            SessionError::Replay { .. } => "replay_error",
        }
    }

    /// HTTP status code for the error.
    pub fn status(&self) -> u16 {
        match self {
            SessionError::UnknownSession(_) | SessionError::UnknownImage(_) => 404,
            SessionError::Busy(_) => 409,
            SessionError::Storage(_) | SessionError::Replay { .. } => 500,
            _ => 400,
        }
    }

    /// Structured context for clients.
    pub fn detail(&self) -> Value {
        match self {
            SessionError::Ingest(IngestError::Validation { record, reason }) => {
                json!({ "record": record, "reason": reason })
            }
            SessionError::UnknownImage(id) => json!({ "image_id": id }),
            SessionError::UnknownClass(c) => json!({ "class": c }),
            SessionError::UnknownSession(id) | SessionError::Busy(id) => {
                json!({ "session_id": id })
            }
            SessionError::Replay { seq, .. } => json!({ "seq": seq }),
            _ => Value::Null,
        }
    }

    pub fn to_body(&self) -> Value {
        json!({ "code": self.code(), "message": self.to_string(), "detail": self.detail() })
    }
}
