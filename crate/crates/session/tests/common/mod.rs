#![allow(dead_code)]

use rulelab_core::{Dataset, HoldoutExample, ImageRecord, OverlapConfig};

fn img(id: &str, objs: &[(&str, usize)]) -> ImageRecord {
    objs.iter()
        .fold(ImageRecord::new(id), |i, (t, n)| i.with_objects(t, *n))
}

/// Four-biome task: 6 pool images
/// and 2 holdout images per class. Some temperate images contain a water
/// pool, which also marks mangroves.
pub fn biomes() -> Dataset {
    type Variant = &'static [(&'static str, usize)];
    let classes: [(&str, [Variant; 2]); 4] = [
        (
            "mangrove",
            [
                &[("tree roots", 2), ("water pool", 1), ("tree", 2)],
                &[("tree roots", 1), ("water pool", 2)],
            ],
        ),
        (
            "boreal",
            [
                &[("bush", 2), ("tree", 4), ("rock", 1)],
                &[("tree", 5), ("snow", 1)],
            ],
        ),
        (
            "tropical",
            [&[("vine", 3), ("tree", 6)], &[("vine", 1), ("parrot", 1)]],
        ),
        (
            "temperate",
            [
                &[("rock", 2), ("tree", 2), ("deer", 1)],
                &[("deer", 2), ("water pool", 1)],
            ],
        ),
    ];
    let mut pool = Vec::new();
    let mut holdout = Vec::new();
    for (class, variants) in classes {
        for i in 0..6 {
            pool.push(img(&format!("{class}-{i}"), variants[i % 2]));
        }
        for i in 0..2 {
            holdout.push(HoldoutExample {
                image: img(&format!("{class}-h{i}"), variants[i % 2]),
                label: class.into(),
            });
        }
    }
    Dataset {
        task_name: "biomes".into(),
        classes: vec![
            "mangrove".into(),
            "boreal".into(),
            "tropical".into(),
            "temperate".into(),
        ],
        pool,
        holdout,
        overlap: OverlapConfig::default(),
    }
}
