mod oracles;

use std::collections::{BTreeMap, BTreeSet};

use oracles::TestRng;
use rulelab_core::recommender::{feature_vector, kmeans::kmeans, ranked_candidates};
use rulelab_core::{
    compute_importance, holdout_accuracy, informativeness, predicate_vocabulary,
    rank_objects_for_dropdown, suggest_images, AccuracyReport, ActiveLearningConfig, BBox, Clause,
    Dataset, HoldoutExample, ImageRecord, ImportanceTable32, Literal, OverlapConfig, PredicateAtom,
    Rule, RuleSet, SuggestionSet,
};

fn random_corpus(rng: &mut TestRng) -> Vec<ImageRecord> {
    let types = ["a", "b", "c", "d", "e", "f"];
    let n = 1 + rng.below(30);
    (0..n)
        .map(|i| {
            let mut img = ImageRecord::new(format!("i{i}"));
            for t in types {
                if rng.chance(0.4) {
                    img = img.with_objects(t, 1 + rng.below(5));
                }
            }
            img
        })
        .collect()
}

#[test]
fn importance_matches_double_loop_on_random_corpora() {
    let mut rng = TestRng::new(11);
    for _ in 0..50 {
        let corpus = random_corpus(&mut rng);
        let want = oracles::importance_oracle(&corpus);
        let got: rulelab_core::ImportanceTable = compute_importance(&corpus);
        assert_eq!(
            got.entries.keys().collect::<Vec<_>>(),
            want.keys().collect::<Vec<_>>()
        );
        for (t, w) in &want {
            assert!(
                (got.score(t) - w).abs() <= 1e-9,
                "{t}: {} vs {w}",
                got.score(t)
            );
        }
    }
}

#[test]
fn importance_is_zero_when_present_everywhere_and_for_unseen() {
    let corpus: Vec<ImageRecord> = (0..4)
        .map(|i| {
            ImageRecord::new(format!("{i}"))
                .with_objects("sky", 1 + i)
                .with_objects("x", (i == 0) as usize)
        })
        .collect();
    let t: rulelab_core::ImportanceTable = compute_importance(&corpus);
    assert_eq!(t.score("sky"), 0.0);
    assert_eq!(t.score("never"), 0.0);
    // x: one image of four, count 1 => ln(4) / 4
    assert!((t.score("x") - 4f64.ln() / 4.0).abs() < 1e-12);
    let empty: rulelab_core::ImportanceTable = compute_importance(&[]);
    assert!(empty.entries.is_empty());
}

#[test]
fn importance_f32_tracks_f64() {
    let mut rng = TestRng::new(5);
    let corpus = random_corpus(&mut rng);
    let a: rulelab_core::ImportanceTable = compute_importance(&corpus);
    let b: ImportanceTable32 = compute_importance(&corpus);
    for (t, e) in &a.entries {
        assert!((e.score - b.score(t) as f64).abs() < 1e-5);
    }
}

#[test]
fn dropdown_ranking_is_descending_with_name_ties() {
    let corpus = vec![
        ImageRecord::new("1")
            .with_objects("rare", 3)
            .with_objects("common", 1)
            .with_objects("tie_b", 1),
        ImageRecord::new("2")
            .with_objects("common", 1)
            .with_objects("tie_a", 1),
        ImageRecord::new("3").with_objects("common", 2),
    ];
    let t: rulelab_core::ImportanceTable = compute_importance(&corpus);
    let ranked = rank_objects_for_dropdown(&t);
    assert_eq!(ranked, vec!["rare", "tie_a", "tie_b", "common"]);
    for w in ranked.windows(2) {
        assert!(t.score(&w[0]) >= t.score(&w[1]));
    }
}

fn lit(atom: PredicateAtom) -> Literal {
    Literal::pos(atom)
}

/// Three classes whose rules conflict on some holdout images.
fn conflicting_setup() -> (RuleSet, Vec<HoldoutExample>) {
    let mut rs = RuleSet::empty(&["kitchen", "office", "garage"]);
    rs.rules[0] = Rule::new("kitchen")
        .with_clause(Clause::new(vec![lit(PredicateAtom::has_object("oven"))]).unwrap());
    rs.rules[1] = Rule::new("office")
        .with_clause(Clause::new(vec![lit(PredicateAtom::has_object("desk"))]).unwrap());
    rs.rules[2] = Rule::new("garage").with_clause(
        Clause::new(vec![
            lit(PredicateAtom::has_object("car")),
            Literal::neg(PredicateAtom::has_object("desk")),
        ])
        .unwrap(),
    );
    let ex = |id: &str, objs: &[&str], label: &str| {
        let mut img = ImageRecord::new(id);
        for o in objs {
            img = img.with_objects(o, 1);
        }
        HoldoutExample {
            image: img,
            label: label.into(),
        }
    };
    let holdout = vec![
        ex("h1", &["oven"], "kitchen"),
        ex("h2", &["oven", "desk"], "kitchen"),
        ex("h3", &["desk"], "office"),
        ex("h4", &["desk", "car"], "office"),
        ex("h5", &[], "office"),
        ex("h6", &["car"], "garage"),
        ex("h7", &["car", "oven"], "garage"),
        ex("h8", &["car"], "garage"),
    ];
    (rs, holdout)
}

#[test]
fn holdout_accuracy_matches_oracle() {
    let (rs, holdout) = conflicting_setup();
    let rep: AccuracyReport = holdout_accuracy(&rs, &holdout, &OverlapConfig::default());
    let (overall, per) = oracles::accuracy_oracle(&rs, &holdout, 0.0);
    assert!((rep.overall - overall).abs() < 1e-12);
    for (class, (c, t)) in per {
        let got = &rep.per_class[&class];
        assert_eq!((got.correct, got.total), (c, t), "{class}");
    }
    // h1, h3, h4, h6, h8 correct
    assert!((rep.overall - 5.0 / 8.0).abs() < 1e-12);
}

#[test]
fn holdout_accuracy_matches_oracle_on_random_rules() {
    let mut rng = TestRng::new(99);
    let types = ["a", "b", "c", "d"];
    for _ in 0..50 {
        let mut rs = RuleSet::empty(&["x", "y", "z"]);
        for r in rs.rules.iter_mut() {
            for _ in 0..1 + rng.below(3) {
                let lits: Vec<Literal> = (0..1 + rng.below(3))
                    .map(|_| Literal {
                        atom: PredicateAtom::count_at_least(
                            types[rng.below(4)],
                            1 + rng.below(2) as u32,
                        ),
                        negated: rng.chance(0.3),
                    })
                    .collect();
                let c = Clause::new(lits).unwrap();
                if r.position_of_form(&c.canonical_form()).is_none() {
                    r.clauses.push(c);
                }
            }
        }
        let holdout: Vec<HoldoutExample> = random_corpus(&mut rng)
            .into_iter()
            .map(|mut img| {
                img.objects
                    .retain(|o| types.contains(&o.object_type.as_str()));
                HoldoutExample {
                    image: img,
                    label: ["x", "y", "z"][rng.below(3)].into(),
                }
            })
            .collect();
        let rep: AccuracyReport = holdout_accuracy(&rs, &holdout, &OverlapConfig::default());
        let (overall, _) = oracles::accuracy_oracle(&rs, &holdout, 0.0);
        assert!((rep.overall - overall).abs() < 1e-12);
    }
}

/// Informativeness recomputed literally: satisfied-rule count plus the mean,
/// over unsatisfied rules, of the best satisfied-literal fraction.
fn informativeness_oracle(img: &ImageRecord, rs: &RuleSet) -> f64 {
    let mut sat = 0.0;
    let mut close = Vec::new();
    for r in &rs.rules {
        if oracles::truth_table_rule(r, img, 0.0) {
            sat += 1.0;
        } else {
            let mut best = 0.0f64;
            for c in r.clauses.iter().filter(|c| !c.is_banned()) {
                let hit = c
                    .literals()
                    .iter()
                    .filter(|l| oracles::atom_truth(&l.atom, img, 0.0) != l.negated)
                    .count();
                best = best.max(hit as f64 / c.len() as f64);
            }
            close.push(best);
        }
    }
    sat + if close.is_empty() {
        0.0
    } else {
        close.iter().sum::<f64>() / close.len() as f64
    }
}

#[test]
fn informativeness_matches_oracle_and_grows_with_satisfied_literals() {
    let (rs, holdout) = conflicting_setup();
    for ex in &holdout {
        let got: f64 = informativeness(&ex.image, &rs, &OverlapConfig::default());
        assert!(
            (got - informativeness_oracle(&ex.image, &rs)).abs() < 1e-12,
            "{}",
            ex.image.image_id
        );
    }
    // adding a literal's worth of evidence to an unmatched rule raises the score
    let mut rs2 = RuleSet::empty(&["p", "q"]);
    rs2.rules[0] = Rule::new("p").with_clause(
        Clause::new(vec![
            lit(PredicateAtom::has_object("a")),
            lit(PredicateAtom::has_object("b")),
            lit(PredicateAtom::has_object("c")),
        ])
        .unwrap(),
    );
    rs2.rules[1] =
        Rule::new("q").with_clause(Clause::new(vec![lit(PredicateAtom::has_object("z"))]).unwrap());
    let mut img = ImageRecord::new("x");
    let mut prev: f64 = informativeness(&img, &rs2, &OverlapConfig::default());
    for t in ["a", "b"] {
        img = img.with_objects(t, 1);
        let s: f64 = informativeness(&img, &rs2, &OverlapConfig::default());
        assert!(s > prev);
        prev = s;
    }
    img = img.with_objects("c", 1);
    let s: f64 = informativeness(&img, &rs2, &OverlapConfig::default());
    assert!((s - 1.0).abs() < 1e-12);
}

#[test]
fn kmeans_recovers_optimal_partition_on_separated_blobs() {
    let mut rng = TestRng::new(3);
    let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    for trial in 0..10 {
        let mut pts = Vec::new();
        for c in centers {
            for _ in 0..4 {
                let jx = (rng.below(1000) as f64 / 1000.0) - 0.5;
                let jy = (rng.below(1000) as f64 / 1000.0) - 0.5;
                pts.push(vec![c[0] + jx, c[1] + jy]);
            }
        }
        let want = oracles::optimal_partition(&pts, 3);
        let got = kmeans(&pts, 3, trial, 100);
        // same partition up to relabeling
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert_eq!(want[i] == want[j], got.assignments[i] == got.assignments[j]);
            }
        }
    }
}

/// Pool of unresolved images forming three tight groups in feature space.
fn clustered_pool() -> (Vec<ImageRecord>, RuleSet, Vec<PredicateAtom>) {
    let mut pool = Vec::new();
    let groups = [["tree", "river"], ["car", "road"], ["desk", "lamp"]];
    for (g, objs) in groups.iter().enumerate() {
        for i in 0..4 {
            let mut img = ImageRecord::new(format!("g{g}_{i}"));
            for o in objs {
                img = img.with_objects(o, 1);
            }
            if i % 2 == 0 {
                img = img.with_attribute(&format!("tag{g}"));
            }
            pool.push(img);
        }
    }
    let rs = RuleSet::empty(&["x", "y"]);
    let ds = Dataset {
        task_name: "t".into(),
        classes: vec!["x".into(), "y".into()],
        pool: pool.clone(),
        holdout: vec![],
        overlap: OverlapConfig::default(),
    };
    let vocab = predicate_vocabulary(&ds);
    (pool, rs, vocab)
}

#[test]
fn suggestions_cover_each_optimal_cluster_once() {
    let (pool, rs, vocab) = clustered_pool();
    let ocfg = OverlapConfig::default();
    let points: Vec<Vec<f64>> = pool
        .iter()
        .map(|i| feature_vector(i, &vocab, &ocfg))
        .collect();
    let opt = oracles::optimal_partition(&points, 3);
    for seed in 0..10 {
        let cfg = ActiveLearningConfig {
            k: 3,
            seed,
            ..Default::default()
        };
        let s: SuggestionSet = suggest_images(&pool, &BTreeMap::new(), &rs, &vocab, &cfg, &ocfg);
        assert_eq!(s.image_ids.len(), 3);
        let groups: BTreeSet<usize> = s
            .image_ids
            .iter()
            .map(|id| opt[pool.iter().position(|p| &p.image_id == id).unwrap()])
            .collect();
        assert_eq!(groups.len(), 3, "seed {seed}: {:?}", s.image_ids);
    }
}

#[test]
fn suggestions_are_valid_and_deterministic() {
    let mut rng = TestRng::new(21);
    for round in 0..20 {
        let pool: Vec<ImageRecord> = random_corpus(&mut rng);
        let mut rs = RuleSet::empty(&["x", "y"]);
        rs.rules[0] = Rule::new("x")
            .with_clause(Clause::new(vec![lit(PredicateAtom::has_object("a"))]).unwrap());
        rs.rules[1] = Rule::new("y").with_clause(
            Clause::new(vec![
                lit(PredicateAtom::has_object("b")),
                lit(PredicateAtom::has_object("c")),
            ])
            .unwrap(),
        );
        let manual: BTreeMap<String, String> = pool
            .iter()
            .filter(|_| rng.chance(0.2))
            .map(|i| (i.image_id.clone(), "x".to_string()))
            .collect();
        let ds = Dataset {
            task_name: "t".into(),
            classes: vec!["x".into(), "y".into()],
            pool: pool.clone(),
            holdout: vec![],
            overlap: OverlapConfig::default(),
        };
        let vocab = predicate_vocabulary(&ds);
        let ocfg = OverlapConfig::default();
        let k = 1 + round % 4;
        let cfg = ActiveLearningConfig {
            k,
            seed: round as u64,
            ..Default::default()
        };
        let first: SuggestionSet = suggest_images(&pool, &manual, &rs, &vocab, &cfg, &ocfg);
        for _ in 0..9 {
            assert_eq!(
                suggest_images::<f64>(&pool, &manual, &rs, &vocab, &cfg, &ocfg),
                first
            );
        }
        let candidates: BTreeSet<String> = ranked_candidates::<f64>(&pool, &manual, &rs, &ocfg)
            .into_iter()
            .map(|(i, _)| i.image_id.clone())
            .collect();
        let ids: BTreeSet<&String> = first.image_ids.iter().collect();
        assert_eq!(ids.len(), first.image_ids.len(), "duplicates");
        assert_eq!(
            first.image_ids.len(),
            k.min(candidates.len().min(cfg.intermediate()))
                .min(distinct_points(&pool, &manual, &rs, &vocab, &ocfg, &cfg))
        );
        for id in &first.image_ids {
            assert!(candidates.contains(id));
            assert!(!manual.contains_key(id));
            let img = pool.iter().find(|p| &p.image_id == id).unwrap();
            let matched = rs
                .rules
                .iter()
                .filter(|r| oracles::truth_table_rule(r, img, 0.0))
                .count();
            assert_ne!(matched, 1);
        }
    }
}

/// Upper bound on non-empty clusters: the number of distinct feature vectors
/// among the intermediate set, or k if larger sets are available.
fn distinct_points(
    pool: &[ImageRecord],
    manual: &BTreeMap<String, String>,
    rs: &RuleSet,
    vocab: &[PredicateAtom],
    ocfg: &OverlapConfig,
    cfg: &ActiveLearningConfig,
) -> usize {
    let mut ranked = ranked_candidates::<f64>(pool, manual, rs, ocfg);
    ranked.truncate(cfg.intermediate());
    let set: BTreeSet<Vec<u8>> = ranked
        .iter()
        .map(|(i, _)| {
            feature_vector::<f64>(i, vocab, ocfg)
                .iter()
                .map(|&v| v as u8)
                .collect()
        })
        .collect();
    set.len()
}

#[test]
fn overlap_threshold_is_respected_by_accuracy() {
    // two boxes with IoU 1/3 overlap at threshold 0 but not at 0.5
    let img = ImageRecord::new("h")
        .with_object("cup", BBox::new(0.0, 0.0, 2.0, 2.0))
        .with_object("saucer", BBox::new(1.0, 0.0, 2.0, 2.0));
    let mut rs = RuleSet::empty(&["set", "other"]);
    rs.rules[0] = Rule::new("set")
        .with_clause(Clause::new(vec![lit(PredicateAtom::overlaps("cup", "saucer"))]).unwrap());
    let holdout = vec![HoldoutExample {
        image: img,
        label: "set".into(),
    }];
    let lo: AccuracyReport = holdout_accuracy(&rs, &holdout, &OverlapConfig { iou_threshold: 0.0 });
    let hi: AccuracyReport = holdout_accuracy(&rs, &holdout, &OverlapConfig { iou_threshold: 0.5 });
    assert_eq!(lo.overall, 1.0);
    assert_eq!(hi.overall, 0.0);
}
