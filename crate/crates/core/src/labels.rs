//! Label assignment from a ruleset.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::predicate::{ImageRecord, OverlapConfig};
use crate::rules::RuleSet;

/// Label of one pool image with its provenance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LabelStatus {
    Manual { label: String },
    Auto { label: String },
    Unlabeled,
    Ambiguous { classes: BTreeSet<String> },
}

impl LabelStatus {
    /// The committed label, if any.
    pub fn label(&self) -> Option<&str> {
        match self {
            LabelStatus::Manual { label } | LabelStatus::Auto { label } => Some(label),
            _ => None,
        }
    }

    pub fn is_manual(&self) -> bool {
        matches!(self, LabelStatus::Manual { .. })
    }

    pub fn kind(&self) -> StatusKind {
        match self {
            LabelStatus::Manual { .. } => StatusKind::Manual,
            LabelStatus::Auto { .. } => StatusKind::Auto,
            LabelStatus::Unlabeled => StatusKind::Unlabeled,
            LabelStatus::Ambiguous { .. } => StatusKind::Ambiguous,
        }
    }

    /// Status implied by the set of matching classes.
    pub fn from_matches<'a>(matches: impl IntoIterator<Item = &'a str>) -> Self {
        let classes: BTreeSet<String> = matches.into_iter().map(str::to_string).collect();
        match classes.len() {
            0 => LabelStatus::Unlabeled,
            1 => LabelStatus::Auto {
                label: classes.into_iter().next().expect("one class"),
            },
            _ => LabelStatus::Ambiguous { classes },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusKind {
    Manual,
    Auto,
    Unlabeled,
    Ambiguous,
}

/// Labels every pool image. Manual labels pass through unchanged.
pub fn apply_ruleset(
    rs: &RuleSet,
    pool: &[ImageRecord],
    manual: &BTreeMap<String, String>,
    cfg: &OverlapConfig,
) -> BTreeMap<String, LabelStatus> {
    pool.iter()
        .map(|img| {
            let status = match manual.get(&img.image_id) {
                Some(label) => LabelStatus::Manual {
                    label: label.clone(),
                },
                None => LabelStatus::from_matches(rs.matching_classes(img, cfg)),
            };
            (img.image_id.clone(), status)
        })
        .collect()
}
