//! Batch commands. Each reads its inputs, runs one core operation, and
//! returns a JSON value with stable key and element order.

use std::collections::BTreeMap;
use std::path::Path;

use rulelab_core::recommender::ImportanceTable;
use rulelab_core::{
    apply_ruleset, compute_importance, holdout_accuracy, induce_ruleset, ingest_dataset,
    rank_objects_for_dropdown, suggest_images, AccuracyReport, Dataset, InductionWarning,
    IngestError, RuleSet, Strictness, SuggestionSet,
};
use rulelab_session::{ProgressStats, SessionConfig, SessionError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    BadFile { path: String, message: String },
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Session(e.into())
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Session(e) => e.code(),
            CliError::Read { .. } => "read_error",
            CliError::Write { .. } => "write_error",
            CliError::BadFile { .. } => "bad_file",
        }
    }

    /// 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Session(SessionError::Storage(_) | SessionError::Replay { .. })
            | CliError::Write { .. } => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let detail = match self {
            CliError::Session(e) => e.detail(),
            CliError::Read { path, .. }
            | CliError::Write { path, .. }
            | CliError::BadFile { path, .. } => json!({ "path": path }),
        };
        json!({ "code": self.code(), "message": self.to_string(), "detail": detail })
    }
}

/// `{image_id, label}` entry of a labels or ground-truth file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    pub image_id: String,
    pub label: String,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::BadFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_dataset(path: &Path, strict: bool) -> Result<(Dataset, Vec<String>), CliError> {
    let strictness = if strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    };
    Ok(ingest_dataset(path, strictness)?)
}

/// Reads a labels file; duplicate ids are rejected.
pub fn load_labels(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let entries: Vec<LabelEntry> = read_json(path)?;
    let mut out = BTreeMap::new();
    for e in entries {
        if let Some(prev) = out.insert(e.image_id.clone(), e.label) {
            return Err(CliError::BadFile {
                path: path.display().to_string(),
                message: format!("image `{}` listed twice (first as `{prev}`)", e.image_id),
            });
        }
    }
    Ok(out)
}

pub fn labels_to_entries(labels: &BTreeMap<String, String>) -> Vec<LabelEntry> {
    labels
        .iter()
        .map(|(id, l)| LabelEntry {
            image_id: id.clone(),
            label: l.clone(),
        })
        .collect()
}

pub fn load_rules(path: &Path, ds: &Dataset) -> Result<RuleSet, CliError> {
    let rs: RuleSet = read_json(path)?;
    rs.validate(&ds.classes).map_err(SessionError::from)?;
    Ok(rs)
}

pub fn load_config(path: Option<&Path>) -> Result<SessionConfig, CliError> {
    let cfg: SessionConfig = match path {
        Some(p) => read_json(p)?,
        None => SessionConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Manual labels must name pool images and dataset classes.
pub fn check_labels(ds: &Dataset, labels: &BTreeMap<String, String>) -> Result<(), CliError> {
    for (id, label) in labels {
        if ds.pool_image(id).is_none() {
            return Err(SessionError::UnknownImage(id.clone()).into());
        }
        if !ds.has_class(label) {
            return Err(SessionError::UnknownClass(label.clone()).into());
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct InduceOutput {
    pub ruleset: RuleSet,
    pub warnings: Vec<InductionWarning>,
}

pub fn induce(
    ds: &Dataset,
    labels: &BTreeMap<String, String>,
    prev: Option<RuleSet>,
    cfg: &SessionConfig,
) -> Result<InduceOutput, CliError> {
    check_labels(ds, labels)?;
    let prev = prev.unwrap_or_else(|| RuleSet::empty(&ds.classes));
    let (ruleset, warnings) =
        induce_ruleset(labels, ds, &prev, &cfg.induction).map_err(SessionError::from)?;
    Ok(InduceOutput { ruleset, warnings })
}

/// Pool labels under `rs` with a status count summary.
pub fn apply(
    ds: &Dataset,
    rs: &RuleSet,
    labels: &BTreeMap<String, String>,
) -> Result<Value, CliError> {
    check_labels(ds, labels)?;
    let statuses = apply_ruleset(rs, &ds.pool, labels, &ds.overlap);
    let progress = ProgressStats::from_statuses(statuses.values());
    let rows: Vec<Value> = statuses
        .iter()
        .map(|(id, st)| {
            let mut v = serde_json::to_value(st).expect("status serializes");
            v["image_id"] = json!(id);
            v
        })
        .collect();
    Ok(json!({ "counts": progress, "labels": rows }))
}

pub fn eval(ds: &Dataset, rs: &RuleSet) -> AccuracyReport {
    holdout_accuracy(rs, &ds.holdout, &ds.overlap)
}

pub fn suggest(
    ds: &Dataset,
    rs: &RuleSet,
    labels: &BTreeMap<String, String>,
    cfg: &SessionConfig,
) -> Result<SuggestionSet, CliError> {
    check_labels(ds, labels)?;
    Ok(suggest_images(
        &ds.pool,
        labels,
        rs,
        &ds.pool_vocabulary(),
        &cfg.active_learning,
        &ds.overlap,
    ))
}

pub fn importance(ds: &Dataset) -> Value {
    let table: ImportanceTable<f64> = compute_importance(&ds.pool);
    let objects: Vec<Value> = rank_objects_for_dropdown(&table)
        .into_iter()
        .map(|t| {
            let e = &table.entries[&t];
            json!({ "object": t, "score": e.score, "image_frequency": e.image_frequency, "total_count": e.total_count })
        })
        .collect();
    json!({ "n_images": table.n_images, "objects": objects })
}

/// Writes `text` to `out`, or stdout when `out` is `None`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => rulelab_session::write_atomic(p, format!("{text}\n").as_bytes()).map_err(|e| {
            CliError::Write {
                path: p.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            }
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Write {
                    path: "<stdout>".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}
