//! Labeled-set export.

use rulelab_core::{LabelStatus, StatusKind};
use serde::{Deserialize, Serialize};

use crate::state::LabelState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    Auto,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportEntry {
    pub image_id: String,
    pub label: String,
    pub provenance: Provenance,
}

/// An image left without a single label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemainderEntry {
    pub image_id: String,
    #[serde(flatten)]
    pub status: LabelStatus,
}

/// Export file contents, ordered by image id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub labels: Vec<ExportEntry>,
    pub remainder: Vec<RemainderEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub path: Option<String>,
    pub exported: usize,
    pub manual: usize,
    pub auto: usize,
    pub remainder: usize,
}

impl ExportDocument {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a LabelState>) -> Self {
        let mut doc = ExportDocument::default();
        for ls in labels {
            let provenance = match ls.status.kind() {
                StatusKind::Manual => Provenance::Manual,
                StatusKind::Auto => Provenance::Auto,
                _ => {
                    doc.remainder.push(RemainderEntry {
                        image_id: ls.image_id.clone(),
                        status: ls.status.clone(),
                    });
                    continue;
                }
            };
            let label = ls
                .status
                .label()
                .expect("manual and auto carry a label")
                .to_string();
            doc.labels.push(ExportEntry {
                image_id: ls.image_id.clone(),
                label,
                provenance,
            });
        }
        doc.labels.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        doc.remainder.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("export serializes")
    }

    pub fn summary(&self, path: Option<String>) -> ExportSummary {
        let manual = self
            .labels
            .iter()
            .filter(|e| e.provenance == Provenance::Manual)
            .count();
        ExportSummary {
            path,
            exported: self.labels.len(),
            manual,
            auto: self.labels.len() - manual,
            remainder: self.remainder.len(),
        }
    }
}
