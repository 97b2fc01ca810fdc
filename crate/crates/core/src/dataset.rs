//! Dataset files: ingestion, validation, and the candidate predicate vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::IngestError;
use crate::predicate::{
    normalize_token, BBox, DetectedObject, ImageRecord, OverlapConfig, PredicateAtom,
};

/// How unknown fields in a dataset file are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strictness {
    /// Reject unknown fields.
    Strict,
    /// Collect a warning per unknown field.
    #[default]
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutExample {
    pub image: ImageRecord,
    pub label: String,
}

/// A validated labeling task. Pool and holdout ids are disjoint and every
/// holdout label names a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetFile", into = "DatasetFile")]
pub struct Dataset {
    pub task_name: String,
    pub classes: Vec<String>,
    pub pool: Vec<ImageRecord>,
    pub holdout: Vec<HoldoutExample>,
    pub overlap: OverlapConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TaskSection {
    name: String,
    classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overlap_iou_threshold: Option<f64>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ObjectEntry {
    #[serde(rename = "type")]
    object_type: String,
    bbox: BBox,
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask_ref: Option<String>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ImageEntry {
    id: String,
    #[serde(default)]
    uri: String,
    #[serde(default)]
    objects: Vec<ObjectEntry>,
    #[serde(default)]
    attributes: Vec<String>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct HoldoutEntry {
    image: ImageEntry,
    label: String,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DatasetFile {
    task: TaskSection,
    #[serde(default)]
    pool: Vec<ImageEntry>,
    #[serde(default)]
    holdout: Vec<HoldoutEntry>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

impl TryFrom<DatasetFile> for Dataset {
    type Error = IngestError;

    fn try_from(file: DatasetFile) -> Result<Self, Self::Error> {
        file.validate(Strictness::Lenient).map(|(ds, _)| ds)
    }
}

impl From<Dataset> for DatasetFile {
    fn from(ds: Dataset) -> Self {
        let image = |img: ImageRecord| ImageEntry {
            id: img.image_id,
            uri: img.uri,
            objects: img
                .objects
                .into_iter()
                .map(|o| ObjectEntry {
                    object_type: o.object_type,
                    bbox: o.bbox,
                    confidence: o.confidence,
                    mask_ref: o.mask_ref,
                    extra: BTreeMap::new(),
                })
                .collect(),
            attributes: img.attributes.into_iter().collect(),
            extra: BTreeMap::new(),
        };
        DatasetFile {
            task: TaskSection {
                name: ds.task_name,
                classes: ds.classes,
                overlap_iou_threshold: Some(ds.overlap.iou_threshold),
                extra: BTreeMap::new(),
            },
            pool: ds.pool.into_iter().map(image).collect(),
            holdout: ds
                .holdout
                .into_iter()
                .map(|h| HoldoutEntry {
                    image: image(h.image),
                    label: h.label,
                    extra: BTreeMap::new(),
                })
                .collect(),
            extra: BTreeMap::new(),
        }
    }
}

fn check_extra(
    extra: &BTreeMap<String, Value>,
    record: &str,
    strictness: Strictness,
    warnings: &mut Vec<String>,
) -> Result<(), IngestError> {
    for key in extra.keys() {
        match strictness {
            Strictness::Strict => {
                return Err(IngestError::validation(
                    record,
                    format!("unknown field `{key}`"),
                ))
            }
            Strictness::Lenient => {
                warnings.push(format!("{record}: ignoring unknown field `{key}`"))
            }
        }
    }
    Ok(())
}

impl ImageEntry {
    fn validate(
        self,
        record: &str,
        strictness: Strictness,
        warnings: &mut Vec<String>,
    ) -> Result<ImageRecord, IngestError> {
        check_extra(&self.extra, record, strictness, warnings)?;
        if self.id.trim().is_empty() {
            return Err(IngestError::validation(record, "empty image id"));
        }
        let mut objects = Vec::with_capacity(self.objects.len());
        for (j, o) in self.objects.into_iter().enumerate() {
            let orec = format!("{record}.objects[{j}]");
            check_extra(&o.extra, &orec, strictness, warnings)?;
            let object_type = normalize_token(&o.object_type);
            if object_type.is_empty() {
                return Err(IngestError::validation(orec, "empty object type"));
            }
            if !o.bbox.is_valid() {
                return Err(IngestError::validation(
                    orec,
                    "bbox must be finite with non-negative width and height",
                ));
            }
            if !(0.0..=1.0).contains(&o.confidence) {
                return Err(IngestError::validation(orec, "confidence outside [0, 1]"));
            }
            objects.push(DetectedObject {
                object_type,
                bbox: o.bbox,
                confidence: o.confidence,
                mask_ref: o.mask_ref,
            });
        }
        let mut attributes = BTreeSet::new();
        for a in &self.attributes {
            let a = normalize_token(a);
            if a.is_empty() {
                return Err(IngestError::validation(record, "empty attribute"));
            }
            attributes.insert(a);
        }
        Ok(ImageRecord {
            image_id: self.id,
            uri: self.uri,
            objects,
            attributes,
        })
    }
}

impl DatasetFile {
    fn validate(self, strictness: Strictness) -> Result<(Dataset, Vec<String>), IngestError> {
        let mut warnings = Vec::new();
        check_extra(&self.extra, "document", strictness, &mut warnings)?;
        check_extra(&self.task.extra, "task", strictness, &mut warnings)?;

        let classes: Vec<String> = self
            .task
            .classes
            .iter()
            .map(|c| c.trim().to_string())
            .collect();
        if classes.len() < 2 {
            return Err(IngestError::validation(
                "task",
                "at least two classes are required",
            ));
        }
        let mut seen = BTreeSet::new();
        for c in &classes {
            if c.is_empty() {
                return Err(IngestError::validation("task", "empty class name"));
            }
            if !seen.insert(c.as_str()) {
                return Err(IngestError::validation(
                    "task",
                    format!("duplicate class `{c}`"),
                ));
            }
        }
        let threshold = self.task.overlap_iou_threshold.unwrap_or(0.0);
        if !(0.0..1.0).contains(&threshold) {
            return Err(IngestError::validation(
                "task",
                "overlap_iou_threshold must be in [0, 1)",
            ));
        }

        let mut ids = BTreeSet::new();
        let mut pool = Vec::with_capacity(self.pool.len());
        for (i, entry) in self.pool.into_iter().enumerate() {
            let record = format!("pool[{i}] (id `{}`)", entry.id);
            let img = entry.validate(&record, strictness, &mut warnings)?;
            if !ids.insert(img.image_id.clone()) {
                return Err(IngestError::validation(
                    record,
                    format!("duplicate image_id `{}`", img.image_id),
                ));
            }
            pool.push(img);
        }
        let mut holdout = Vec::with_capacity(self.holdout.len());
        for (i, entry) in self.holdout.into_iter().enumerate() {
            let record = format!("holdout[{i}] (id `{}`)", entry.image.id);
            check_extra(&entry.extra, &record, strictness, &mut warnings)?;
            let label = entry.label.trim().to_string();
            if !seen.contains(label.as_str()) {
                return Err(IngestError::validation(
                    record,
                    format!("label `{label}` is not a task class"),
                ));
            }
            let image = entry.image.validate(&record, strictness, &mut warnings)?;
            if !ids.insert(image.image_id.clone()) {
                return Err(IngestError::validation(
                    record,
                    format!("duplicate image_id `{}`", image.image_id),
                ));
            }
            holdout.push(HoldoutExample { image, label });
        }

        let ds = Dataset {
            task_name: self.task.name,
            classes,
            pool,
            holdout,
            overlap: OverlapConfig {
                iou_threshold: threshold,
            },
        };
        Ok((ds, warnings))
    }
}

impl Dataset {
    /// Parses and validates a dataset document, returning lenient-mode warnings.
    pub fn from_json_str(
        text: &str,
        strictness: Strictness,
    ) -> Result<(Dataset, Vec<String>), IngestError> {
        let file: DatasetFile =
            serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
        file.validate(strictness)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn pool_image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.pool.iter().find(|i| i.image_id == image_id)
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }

    /// Pool and holdout images.
    pub fn all_images(&self) -> impl Iterator<Item = &ImageRecord> {
        self.pool
            .iter()
            .chain(self.holdout.iter().map(|h| &h.image))
    }

    pub fn vocabulary(&self) -> Vec<PredicateAtom> {
        predicate_vocabulary(self)
    }

    /// Vocabulary observed on the pool alone. Induction and suggestions use
    /// this so the holdout never influences them.
    pub fn pool_vocabulary(&self) -> Vec<PredicateAtom> {
        vocabulary_of(&self.pool)
    }
}

/// Reads and validates a dataset file.
pub fn ingest_dataset(
    path: impl AsRef<Path>,
    strictness: Strictness,
) -> Result<(Dataset, Vec<String>), IngestError> {
    let text = std::fs::read_to_string(path)?;
    Dataset::from_json_str(&text, strictness)
}

/// Candidate atoms observed in the dataset, sorted by canonical string.
pub fn predicate_vocabulary(ds: &Dataset) -> Vec<PredicateAtom> {
    vocabulary_of(ds.all_images())
}

pub fn vocabulary_of<'a>(images: impl IntoIterator<Item = &'a ImageRecord>) -> Vec<PredicateAtom> {
    let mut atoms = BTreeMap::new();
    let mut add = |a: PredicateAtom| {
        atoms.entry(a.canonical_string()).or_insert(a);
    };
    for img in images {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for o in &img.objects {
            *counts.entry(o.object_type.as_str()).or_default() += 1;
        }
        for (&t, &k) in &counts {
            add(PredicateAtom::count_at_least(t, k));
        }
        let types: Vec<&str> = counts.keys().copied().collect();
        for (i, &a) in types.iter().enumerate() {
            if counts[a] >= 2 {
                add(PredicateAtom::overlaps(a, a));
            }
            for &b in &types[i + 1..] {
                add(PredicateAtom::overlaps(a, b));
            }
        }
        for attr in &img.attributes {
            add(PredicateAtom::has_attribute(attr));
        }
    }
    atoms.into_values().collect()
}
