use thiserror::Error;

/// Failures while reading a dataset file.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset: {0}")]
    Parse(String),
    #[error("invalid dataset: {record}: {reason}")]
    Validation { record: String, reason: String },
}

impl IngestError {
    pub(crate) fn validation(record: impl Into<String>, reason: impl Into<String>) -> Self {
        IngestError::Validation {
            record: record.into(),
            reason: reason.into(),
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io(_) => "io_error",
            IngestError::Parse(_) => "parse_error",
            IngestError::Validation { .. } => "validation_error",
        }
    }
}

/// Structural problems with rule values (bad atoms, empty clauses, ...).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("clause must contain at least one literal")]
    EmptyClause,
    #[error("count threshold must be at least 1")]
    ZeroCount,
    #[error("object type or attribute name must be non-empty")]
    EmptyName,
    #[error("unknown predicate kind `{0}`")]
    UnknownKind(String),
    #[error("bad arguments for `{kind}`: {reason}")]
    BadArgs { kind: String, reason: String },
    #[error("unknown clause status `{0}`")]
    UnknownStatus(String),
    #[error("rule for `{class}` contains duplicate clause {form}")]
    DuplicateClause { class: String, form: String },
    #[error("ruleset classes do not match: {0}")]
    ClassMismatch(String),
    #[error("clause {form} in `{class}` is active but its form is banned")]
    ActiveBannedClause { class: String, form: String },
}

/// Induction failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InductionError {
    #[error("locked clause {form} of `{class}` is in the banned registry")]
    LockedAndBanned { class: String, form: String },
    #[error("no positive examples for `{0}`")]
    NoPositives(String),
    #[error("empty predicate vocabulary")]
    EmptyVocabulary,
    #[error("no labeled examples")]
    NoLabels,
    #[error("labeled image `{0}` is not in the pool")]
    UnknownImage(String),
    #[error("label `{label}` on `{image}` is not a dataset class")]
    UnknownClass { image: String, label: String },
    #[error("invalid induction config: {0}")]
    BadConfig(String),
}

/// Rejected rule edits.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("removing the last literal would leave an empty clause")]
    WouldEmptyClause,
    #[error("rule already contains clause {0}")]
    DuplicateClause(String),
    #[error("clause already contains literal {0}")]
    DuplicateLiteral(String),
    #[error("cannot lock banned clause {0}")]
    LockBanned(String),
    #[error("clause {0} is locked; unlock it before editing")]
    Locked(String),
    #[error("clause {0} is banned; unban it before editing")]
    Banned(String),
    #[error("clause form {0} is not banned")]
    NotBanned(String),
    #[error(transparent)]
    Invalid(#[from] RuleError),
}
