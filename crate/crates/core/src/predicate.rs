//! Extracted visual evidence and the grounded predicates evaluated against it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RuleError;

/// Lowercases and trims a vocabulary token.
pub fn normalize_token(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Axis-aligned box in pixels, serialized as `[x, y, width, height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, width, height]: [f64; 4]) -> Self {
        BBox {
            x,
            y,
            width,
            height,
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.width, b.height]
    }
}

impl BBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        BBox {
            x,
            y,
            width,
            height,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.width, self.height]
            .iter()
            .all(|v| v.is_finite())
            && self.width >= 0.0
            && self.height >= 0.0
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x + self.width).min(other.x + other.width) - self.x.max(other.x);
        let h = (self.y + self.height).min(other.y + other.height) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter <= 0.0 {
            return 0.0;
        }
        inter / (self.area() + other.area() - inter)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    #[serde(rename = "type")]
    pub object_type: String,
    pub bbox: BBox,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_ref: Option<String>,
}

impl DetectedObject {
    pub fn new(object_type: &str, bbox: BBox) -> Self {
        DetectedObject {
            object_type: normalize_token(object_type),
            bbox,
            confidence: 1.0,
            mask_ref: None,
        }
    }
}

/// One image's extracted evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    #[serde(rename = "id")]
    pub image_id: String,
    #[serde(default)]
    pub uri: String,
    #[serde(default)]
    pub objects: Vec<DetectedObject>,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<String>) -> Self {
        ImageRecord {
            image_id: image_id.into(),
            uri: String::new(),
            objects: Vec::new(),
            attributes: BTreeSet::new(),
        }
    }

    /// Adds `count` non-overlapping objects of one type.
    pub fn with_objects(mut self, object_type: &str, count: usize) -> Self {
        let start = self.objects.len() as f64;
        for i in 0..count {
            let x = (start + i as f64) * 20.0;
            self.objects.push(DetectedObject::new(
                object_type,
                BBox::new(x, 0.0, 10.0, 10.0),
            ));
        }
        self
    }

    pub fn with_object(mut self, object_type: &str, bbox: BBox) -> Self {
        self.objects.push(DetectedObject::new(object_type, bbox));
        self
    }

    pub fn with_attribute(mut self, name: &str) -> Self {
        self.attributes.insert(normalize_token(name));
        self
    }

    pub fn count_of(&self, object_type: &str) -> usize {
        self.objects
            .iter()
            .filter(|o| o.object_type == object_type)
            .count()
    }
}

/// Overlap semantics for `Overlaps` atoms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapConfig {
    /// Boxes overlap when IoU exceeds this; 0 means any positive intersection.
    pub iou_threshold: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig { iou_threshold: 0.0 }
    }
}

/// A grounded boolean property of one image.
///
/// Values are always canonical: `HasObject(t)` is represented as
/// `CountAtLeast { object: t, min: 1 }` and `Overlaps` stores its pair in
/// lexicographic order. Use the constructors rather than building variants
/// by hand.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredicateAtom {
    CountAtLeast { object: String, min: u32 },
    Overlaps { first: String, second: String },
    HasAttribute(String),
}

impl PredicateAtom {
    pub fn has_object(object: &str) -> Self {
        PredicateAtom::CountAtLeast {
            object: normalize_token(object),
            min: 1,
        }
    }

    /// Panics when `min == 0`; see [`PredicateAtom::try_count_at_least`].
    pub fn count_at_least(object: &str, min: u32) -> Self {
        Self::try_count_at_least(object, min).expect("count threshold must be >= 1")
    }

    pub fn try_count_at_least(object: &str, min: u32) -> Result<Self, RuleError> {
        if min == 0 {
            return Err(RuleError::ZeroCount);
        }
        let object = normalize_token(object);
        if object.is_empty() {
            return Err(RuleError::EmptyName);
        }
        Ok(PredicateAtom::CountAtLeast { object, min })
    }

    pub fn overlaps(a: &str, b: &str) -> Self {
        let (a, b) = (normalize_token(a), normalize_token(b));
        if a <= b {
            PredicateAtom::Overlaps {
                first: a,
                second: b,
            }
        } else {
            PredicateAtom::Overlaps {
                first: b,
                second: a,
            }
        }
    }

    pub fn has_attribute(name: &str) -> Self {
        PredicateAtom::HasAttribute(normalize_token(name))
    }

    /// Re-establishes the canonical representation (idempotent).
    pub fn canonicalize(&self) -> Self {
        match self {
            PredicateAtom::CountAtLeast { object, min } => PredicateAtom::CountAtLeast {
                object: normalize_token(object),
                min: (*min).max(1),
            },
            PredicateAtom::Overlaps { first, second } => PredicateAtom::overlaps(first, second),
            PredicateAtom::HasAttribute(n) => PredicateAtom::has_attribute(n),
        }
    }

    /// Deterministic identity string, e.g. `count("table")>=1`.
    pub fn canonical_string(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serializes");
        match self {
            PredicateAtom::CountAtLeast { object, min } => format!("count({})>={}", q(object), min),
            PredicateAtom::Overlaps { first, second } => {
                format!("overlaps({},{})", q(first), q(second))
            }
            PredicateAtom::HasAttribute(n) => format!("attr({})", q(n)),
        }
    }

    pub fn eval(&self, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
        eval_atom(self, img, cfg)
    }

    pub(crate) fn kind_name(&self) -> &'static str {
        match self {
            PredicateAtom::CountAtLeast { .. } => "count_at_least",
            PredicateAtom::Overlaps { .. } => "overlaps",
            PredicateAtom::HasAttribute(_) => "has_attribute",
        }
    }

    pub(crate) fn wire_args(&self) -> Vec<serde_json::Value> {
        use serde_json::Value;
        match self {
            PredicateAtom::CountAtLeast { object, min } => {
                vec![Value::from(object.as_str()), Value::from(*min)]
            }
            PredicateAtom::Overlaps { first, second } => {
                vec![Value::from(first.as_str()), Value::from(second.as_str())]
            }
            PredicateAtom::HasAttribute(n) => vec![Value::from(n.as_str())],
        }
    }

    pub(crate) fn from_wire(kind: &str, args: &[serde_json::Value]) -> Result<Self, RuleError> {
        let bad = |reason: &str| RuleError::BadArgs {
            kind: kind.to_string(),
            reason: reason.to_string(),
        };
        let string_at = |i: usize| -> Result<&str, RuleError> {
            let s = args
                .get(i)
                .and_then(|v| v.as_str())
                .ok_or_else(|| bad("expected string argument"))?;
            if s.trim().is_empty() {
                return Err(RuleError::EmptyName);
            }
            Ok(s)
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("expected {n} arguments")))
            }
        };
        match kind {
            "has_object" => {
                arity(1)?;
                Ok(Self::has_object(string_at(0)?))
            }
            "count_at_least" => {
                arity(2)?;
                let k = args[1]
                    .as_u64()
                    .and_then(|k| u32::try_from(k).ok())
                    .ok_or_else(|| bad("count must be a positive integer"))?;
                Self::try_count_at_least(string_at(0)?, k)
            }
            "overlaps" => {
                arity(2)?;
                Ok(Self::overlaps(string_at(0)?, string_at(1)?))
            }
            "has_attribute" => {
                arity(1)?;
                Ok(Self::has_attribute(string_at(0)?))
            }
            other => Err(RuleError::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for PredicateAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

/// Truth of `atom` on `img`. Detection confidence is ignored.
pub fn eval_atom(atom: &PredicateAtom, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
    match atom {
        PredicateAtom::CountAtLeast { object, min } => img.count_of(object) >= *min as usize,
        PredicateAtom::HasAttribute(n) => img.attributes.contains(n),
        PredicateAtom::Overlaps { first, second } => {
            let objs = &img.objects;
            objs.iter().enumerate().any(|(i, a)| {
                a.object_type == *first
                    && objs.iter().enumerate().any(|(j, b)| {
                        i != j && b.object_type == *second && boxes_overlap(&a.bbox, &b.bbox, cfg)
                    })
            })
        }
    }
}

fn boxes_overlap(a: &BBox, b: &BBox, cfg: &OverlapConfig) -> bool {
    if cfg.iou_threshold <= 0.0 {
        a.intersection_area(b) > 0.0
    } else {
        a.iou(b) > cfg.iou_threshold
    }
}
