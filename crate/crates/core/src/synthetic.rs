//! Seeded synthetic labeling tasks with known ground truth.
//!
//! Each class owns a few signature object types that appear several times in
//! its images. Noise drops a signature type from an image, or inserts a single
//! stray instance of another class's signature type, each with probability
//! `noise`. Shared distractor types and attributes carry no class signal.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, HoldoutExample};
use crate::predicate::{BBox, ImageRecord, OverlapConfig};

const SIGNATURES: &[&str] = &[
    "tree", "river", "car", "road", "desk", "lamp", "boat", "wave", "oven", "sink", "shelf", "book",
];
const DISTRACTORS: &[&str] = &["person", "sky", "bird", "window", "bag"];
const ATTRIBUTES: &[&str] = &["outdoor", "blurry", "daylight"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub pool_size: usize,
    pub holdout_per_class: usize,
    pub signatures_per_class: usize,
    pub distractors: usize,
    /// Per-predicate corruption probability.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 3,
            pool_size: 300,
            holdout_per_class: 20,
            signatures_per_class: 2,
            distractors: 3,
            noise: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.classes < 2 {
            return Err("need at least 2 classes".into());
        }
        if self.signatures_per_class == 0
            || self.classes * self.signatures_per_class > SIGNATURES.len()
        {
            return Err(format!(
                "classes * signatures_per_class must be in 1..={}",
                SIGNATURES.len()
            ));
        }
        if self.distractors > DISTRACTORS.len() {
            return Err(format!("at most {} distractor types", DISTRACTORS.len()));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err("noise must be in [0, 0.5)".into());
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.classes).map(|k| format!("class_{k}")).collect()
    }

    /// Signature object types of class `k`.
    pub fn signatures(&self, k: usize) -> &'static [&'static str] {
        let s = self.signatures_per_class;
        &SIGNATURES[k * s..(k + 1) * s]
    }
}

/// A generated task: the dataset plus ground truth for every pool image.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTask {
    pub dataset: Dataset,
    pub ground_truth: BTreeMap<String, String>,
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let x = rng.gen_range(0..240) as f64;
    let y = rng.gen_range(0..240) as f64;
    BBox::new(
        x,
        y,
        rng.gen_range(8..48) as f64,
        rng.gen_range(8..48) as f64,
    )
}

fn add_objects(mut img: ImageRecord, t: &str, n: usize, rng: &mut ChaCha8Rng) -> ImageRecord {
    for _ in 0..n {
        img = img.with_object(t, random_box(rng));
    }
    img
}

fn image(cfg: &SyntheticConfig, id: String, class: usize, rng: &mut ChaCha8Rng) -> ImageRecord {
    let mut img = ImageRecord::new(id);
    img.uri = format!("synthetic://{}", img.image_id);
    for k in 0..cfg.classes {
        for t in cfg.signatures(k) {
            let n = if k == class {
                if rng.gen_bool(cfg.noise) {
                    0
                } else {
                    rng.gen_range(2..=4)
                }
            } else {
                usize::from(rng.gen_bool(cfg.noise))
            };
            img = add_objects(img, t, n, rng);
        }
    }
    for t in &DISTRACTORS[..cfg.distractors] {
        if rng.gen_bool(0.5) {
            let n = rng.gen_range(1..=3);
            img = add_objects(img, t, n, rng);
        }
    }
    for a in ATTRIBUTES {
        if rng.gen_bool(0.5) {
            img = img.with_attribute(a);
        }
    }
    img
}

/// Generates a task. Pool images cycle through the classes so every class
/// gets `pool_size / classes` images, give or take one.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticTask, String> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let classes = cfg.class_names();
    let mut pool = Vec::with_capacity(cfg.pool_size);
    let mut ground_truth = BTreeMap::new();
    for i in 0..cfg.pool_size {
        let k = i % cfg.classes;
        let id = format!("img-{i:04}");
        ground_truth.insert(id.clone(), classes[k].clone());
        pool.push(image(cfg, id, k, &mut rng));
    }
    let mut holdout = Vec::with_capacity(cfg.classes * cfg.holdout_per_class);
    for i in 0..cfg.classes * cfg.holdout_per_class {
        let k = i % cfg.classes;
        let img = image(cfg, format!("hold-{i:04}"), k, &mut rng);
        holdout.push(HoldoutExample {
            image: img,
            label: classes[k].clone(),
        });
    }
    let dataset = Dataset {
        task_name: format!("synthetic-{}", cfg.seed),
        classes,
        pool,
        holdout,
        overlap: OverlapConfig::default(),
    };
    Ok(SyntheticTask {
        dataset,
        ground_truth,
    })
}
