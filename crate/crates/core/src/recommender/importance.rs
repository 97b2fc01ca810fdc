//! TF-IDF style object importance: each image is a document, the dataset the
//! corpus, and an object's score is its average TF-IDF over all images.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::num::Scalar;
use crate::predicate::ImageRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectImportance<F> {
    pub score: F,
    /// Images containing the type.
    pub image_frequency: usize,
    /// Summed per-image counts.
    pub total_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable<F> {
    /// Number of images the table was computed over.
    pub n_images: usize,
    pub entries: BTreeMap<String, ObjectImportance<F>>,
}

impl<F: Scalar> ImportanceTable<F> {
    /// Score of `object_type`, zero for unseen types.
    pub fn score(&self, object_type: &str) -> F {
        self.entries.get(object_type).map_or(F::zero(), |e| e.score)
    }

    pub fn ranked(&self) -> Vec<String> {
        rank_objects_for_dropdown(self)
    }
}

/// `sum_i count(x, i) * ln(N / imgf(x)) / N` for every observed type `x`.
pub fn compute_importance<F: Scalar>(images: &[ImageRecord]) -> ImportanceTable<F> {
    let n = images.len();
    let mut stats: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for img in images {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for o in &img.objects {
            *counts.entry(o.object_type.as_str()).or_default() += 1;
        }
        for (t, c) in counts {
            let e = stats.entry(t.to_string()).or_default();
            e.0 += 1;
            e.1 += c;
        }
    }
    let entries = stats
        .into_iter()
        .map(|(t, (imgf, total))| {
            let idf = (F::from_count(n) / F::from_count(imgf)).ln();
            let score = F::from_count(total) * idf / F::from_count(n);
            (
                t,
                ObjectImportance {
                    score,
                    image_frequency: imgf,
                    total_count: total,
                },
            )
        })
        .collect();
    ImportanceTable {
        n_images: n,
        entries,
    }
}

/// Object types by descending importance, ties by name.
pub fn rank_objects_for_dropdown<F: Scalar>(tbl: &ImportanceTable<F>) -> Vec<String> {
    let mut items: Vec<(&String, F)> = tbl.entries.iter().map(|(k, v)| (k, v.score)).collect();
    items.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    items.into_iter().map(|(k, _)| k.clone()).collect()
}
