//! Multi-criteria active learning: rank unresolved images by informativeness,
//! cluster the top of the ranking over predicate indicator vectors, and
//! suggest the member nearest each centroid.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::informativeness::informativeness_with_matches;
use super::kmeans::{kmeans, squared_distance};
use crate::num::Scalar;
use crate::predicate::{ImageRecord, OverlapConfig, PredicateAtom};
use crate::rules::RuleSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActiveLearningConfig {
    /// Suggestions per iteration.
    pub k: usize,
    /// Size of the informativeness-ranked set fed to clustering;
    /// `None` means `max(5k, 20)`.
    pub intermediate_n: Option<usize>,
    pub seed: u64,
    pub max_kmeans_iters: usize,
}

impl Default for ActiveLearningConfig {
    fn default() -> Self {
        ActiveLearningConfig {
            k: 3,
            intermediate_n: None,
            seed: 0,
            max_kmeans_iters: 100,
        }
    }
}

impl ActiveLearningConfig {
    pub fn intermediate(&self) -> usize {
        self.intermediate_n.unwrap_or((5 * self.k).max(20))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if self.intermediate() < self.k {
            return Err("intermediate_n must be at least k".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestionSet<F> {
    pub image_ids: Vec<String>,
    /// Informativeness of each suggested image.
    pub scores: BTreeMap<String, F>,
    pub generation: u64,
}

impl<F> SuggestionSet<F> {
    pub fn empty(generation: u64) -> Self {
        SuggestionSet {
            image_ids: Vec::new(),
            scores: BTreeMap::new(),
            generation,
        }
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.image_ids.iter().any(|i| i == image_id)
    }
}

/// Binary indicator vector: one dimension per vocabulary atom.
pub fn feature_vector<F: Scalar>(
    img: &ImageRecord,
    vocab: &[PredicateAtom],
    cfg: &OverlapConfig,
) -> Vec<F> {
    vocab
        .iter()
        .map(|a| {
            if a.eval(img, cfg) {
                F::one()
            } else {
                F::zero()
            }
        })
        .collect()
}

fn by_score_then_id<F: Scalar>(a: &(&ImageRecord, F), b: &(&ImageRecord, F)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.image_id.cmp(&b.0.image_id))
}

/// Candidates (no manual label, satisfied-rule count other than one) with
/// their scores, ranked by informativeness descending then id.
pub fn ranked_candidates<'a, F: Scalar>(
    pool: &'a [ImageRecord],
    manual: &BTreeMap<String, String>,
    rs: &RuleSet,
    cfg: &OverlapConfig,
) -> Vec<(&'a ImageRecord, F)> {
    let mut cands: Vec<(&ImageRecord, F)> = pool
        .iter()
        .filter(|img| !manual.contains_key(&img.image_id))
        .filter_map(|img| {
            let (score, satisfied) = informativeness_with_matches::<F>(img, rs, cfg);
            (satisfied != 1).then_some((img, score))
        })
        .collect();
    cands.sort_by(by_score_then_id);
    cands
}

pub fn suggest_images<F: Scalar>(
    pool: &[ImageRecord],
    manual: &BTreeMap<String, String>,
    rs: &RuleSet,
    vocab: &[PredicateAtom],
    cfg: &ActiveLearningConfig,
    ocfg: &OverlapConfig,
) -> SuggestionSet<F> {
    let mut ranked = ranked_candidates::<F>(pool, manual, rs, ocfg);
    ranked.truncate(cfg.intermediate());
    if ranked.is_empty() {
        return SuggestionSet::empty(rs.generation);
    }
    let k = cfg.k.min(ranked.len()).max(1);
    let points: Vec<Vec<F>> = ranked
        .iter()
        .map(|(img, _)| feature_vector(img, vocab, ocfg))
        .collect();
    let km = kmeans(&points, k, cfg.seed, cfg.max_kmeans_iters);

    let mut picks: Vec<(&ImageRecord, F)> = Vec::with_capacity(k);
    for (j, centroid) in km.centroids.iter().enumerate() {
        let best = ranked
            .iter()
            .zip(&points)
            .zip(&km.assignments)
            .filter(|(_, &a)| a == j)
            .map(|((cand, p), _)| (cand, squared_distance(p, centroid)))
            .min_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| a.0 .0.image_id.cmp(&b.0 .0.image_id))
            });
        if let Some((cand, _)) = best {
            picks.push(*cand);
        }
    }
    picks.sort_by(by_score_then_id);
    SuggestionSet {
        image_ids: picks.iter().map(|(img, _)| img.image_id.clone()).collect(),
        scores: picks
            .iter()
            .map(|(img, s)| (img.image_id.clone(), *s))
            .collect(),
        generation: rs.generation,
    }
}
