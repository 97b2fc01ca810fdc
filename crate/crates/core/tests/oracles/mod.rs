//! Independent reference implementations used to check the library.
//! Nothing here calls the evaluation, induction, or scoring code under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rulelab_core::{ClauseStatus, HoldoutExample, ImageRecord, PredicateAtom, Rule, RuleSet};

/// Atom truth computed from scratch.
pub fn atom_truth(atom: &PredicateAtom, img: &ImageRecord, iou_threshold: f64) -> bool {
    match atom {
        PredicateAtom::CountAtLeast { object, min } => {
            let mut n = 0u32;
            for o in &img.objects {
                if &o.object_type == object {
                    n += 1;
                }
            }
            n >= *min
        }
        PredicateAtom::HasAttribute(a) => img.attributes.iter().any(|x| x == a),
        PredicateAtom::Overlaps { first, second } => {
            for (i, a) in img.objects.iter().enumerate() {
                for (j, b) in img.objects.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let ok_types = (&a.object_type == first && &b.object_type == second)
                        || (&a.object_type == second && &b.object_type == first);
                    if !ok_types {
                        continue;
                    }
                    let ix = (a.bbox.x + a.bbox.width).min(b.bbox.x + b.bbox.width)
                        - a.bbox.x.max(b.bbox.x);
                    let iy = (a.bbox.y + a.bbox.height).min(b.bbox.y + b.bbox.height)
                        - a.bbox.y.max(b.bbox.y);
                    let inter = if ix > 0.0 && iy > 0.0 { ix * iy } else { 0.0 };
                    let union = a.bbox.width * a.bbox.height + b.bbox.width * b.bbox.height - inter;
                    let hit = if iou_threshold <= 0.0 {
                        inter > 0.0
                    } else {
                        union > 0.0 && inter / union > iou_threshold
                    };
                    if hit {
                        return true;
                    }
                }
            }
            false
        }
    }
}

/// Evaluates a rule by building the full truth table over the atoms it
/// mentions and looking up the image's row.
pub fn truth_table_rule(rule: &Rule, img: &ImageRecord, iou_threshold: f64) -> bool {
    let mut vars: Vec<PredicateAtom> = Vec::new();
    for c in &rule.clauses {
        for l in c.literals() {
            if !vars.contains(&l.atom) {
                vars.push(l.atom.clone());
            }
        }
    }
    assert!(vars.len() <= 20, "truth table too large");
    let mut satisfying = BTreeSet::new();
    for row in 0u32..(1 << vars.len()) {
        let value = |a: &PredicateAtom| {
            let k = vars.iter().position(|v| v == a).unwrap();
            row >> k & 1 == 1
        };
        let mut any = false;
        for c in &rule.clauses {
            if c.status == ClauseStatus::Banned {
                continue;
            }
            let mut all = true;
            for l in c.literals() {
                let v = value(&l.atom);
                let lit = if l.negated { !v } else { v };
                all &= lit;
            }
            any |= all;
        }
        if any {
            satisfying.insert(row);
        }
    }
    let mut row = 0u32;
    for (k, a) in vars.iter().enumerate() {
        if atom_truth(a, img, iou_threshold) {
            row |= 1 << k;
        }
    }
    satisfying.contains(&row)
}

/// Attribute-only toy example: truth vector over atoms `a0..a{m-1}`.
pub type Toy = Vec<bool>;

/// All conjunctions of one or two literals over `m` boolean atoms, as
/// `(atom, negated)` lists.
pub fn small_clauses(m: usize) -> Vec<Vec<(usize, bool)>> {
    let mut out = Vec::new();
    for a in 0..m {
        for na in [false, true] {
            out.push(vec![(a, na)]);
            for b in a + 1..m {
                for nb in [false, true] {
                    out.push(vec![(a, na), (b, nb)]);
                }
            }
        }
    }
    out
}

pub fn toy_clause_holds(c: &[(usize, bool)], x: &Toy) -> bool {
    c.iter().all(|&(a, neg)| x[a] != neg)
}

/// Exhaustive search: a DNF of <=2-literal clauses separates the data iff the
/// clauses covering no negative jointly cover every positive. `exclude`
/// removes clauses (by sorted literal list) from consideration.
pub fn two_literal_separable(
    pos: &[Toy],
    neg: &[Toy],
    m: usize,
    exclude: &BTreeSet<Vec<(usize, bool)>>,
) -> bool {
    let pure: Vec<Vec<(usize, bool)>> = small_clauses(m)
        .into_iter()
        .filter(|c| !exclude.contains(c))
        .filter(|c| neg.iter().all(|x| !toy_clause_holds(c, x)))
        .collect();
    pos.iter()
        .all(|x| pure.iter().any(|c| toy_clause_holds(c, x)))
}

/// Direct double-loop importance: average over images of count * ln(N / imgf).
pub fn importance_oracle(images: &[ImageRecord]) -> BTreeMap<String, f64> {
    let n = images.len() as f64;
    let mut types = BTreeSet::new();
    for img in images {
        for o in &img.objects {
            types.insert(o.object_type.clone());
        }
    }
    let mut out = BTreeMap::new();
    for t in types {
        let imgf = images
            .iter()
            .filter(|i| i.objects.iter().any(|o| o.object_type == t))
            .count() as f64;
        let mut sum = 0.0;
        for img in images {
            let objf = img.objects.iter().filter(|o| o.object_type == t).count() as f64;
            sum += objf * (n / imgf).ln();
        }
        out.insert(t, sum / n);
    }
    out
}

/// Per-class (correct, total) and overall accuracy by direct evaluation.
pub fn accuracy_oracle(
    rs: &RuleSet,
    holdout: &[HoldoutExample],
    thr: f64,
) -> (f64, BTreeMap<String, (usize, usize)>) {
    let mut per: BTreeMap<String, (usize, usize)> = rs
        .rules
        .iter()
        .map(|r| (r.class_name.clone(), (0, 0)))
        .collect();
    for ex in holdout {
        let matched: Vec<&str> = rs
            .rules
            .iter()
            .filter(|r| truth_table_rule(r, &ex.image, thr))
            .map(|r| r.class_name.as_str())
            .collect();
        let e = per.get_mut(&ex.label).unwrap();
        e.1 += 1;
        if matched == [ex.label.as_str()] {
            e.0 += 1;
        }
    }
    let (c, t) = per.values().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    (if t == 0 { 0.0 } else { c as f64 / t as f64 }, per)
}

/// Minimum-SSE partition of `points` into exactly `k` non-empty groups by
/// exhaustive enumeration of restricted-growth strings.
pub fn optimal_partition(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    assert!(n <= 16 && k >= 1 && k <= n);
    let mut best = (f64::INFINITY, vec![0; n]);
    let mut labels = vec![0usize; n];
    fn sse(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
        let d = points[0].len();
        let mut total = 0.0;
        for g in 0..k {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == g)
                .map(|(p, _)| p)
                .collect();
            let mut mean = vec![0.0; d];
            for p in &members {
                for i in 0..d {
                    mean[i] += p[i];
                }
            }
            for m in mean.iter_mut() {
                *m /= members.len() as f64;
            }
            for p in &members {
                for i in 0..d {
                    total += (p[i] - mean[i]).powi(2);
                }
            }
        }
        total
    }
    fn rec(
        i: usize,
        used: usize,
        k: usize,
        points: &[Vec<f64>],
        labels: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        let n = points.len();
        if n - i < k - used {
            return;
        }
        if i == n {
            if used == k {
                let s = sse(points, labels, k);
                if s < best.0 {
                    *best = (s, labels.clone());
                }
            }
            return;
        }
        for g in 0..=used.min(k - 1) {
            labels[i] = g;
            rec(i + 1, used.max(g + 1), k, points, labels, best);
        }
    }
    rec(0, 0, k, points, &mut labels, &mut best);
    best.1
}

/// Deterministic xorshift generator for test data.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64) < p
    }
}
