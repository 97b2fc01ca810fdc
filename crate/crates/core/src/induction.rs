//! Propositional FOIL: sequential covering with greedy information-gain
//! literal selection, honoring locked and banned clauses.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::dataset::Dataset;
use crate::error::InductionError;
use crate::num::Scalar;
use crate::predicate::{ImageRecord, OverlapConfig, PredicateAtom};
use crate::rules::{Clause, ClauseStatus, Literal, Rule, RuleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InductionConfig {
    pub max_literals_per_clause: usize,
    pub max_clauses_per_rule: usize,
    pub min_clause_positive_coverage: usize,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            max_literals_per_clause: 4,
            max_clauses_per_rule: 6,
            min_clause_positive_coverage: 1,
        }
    }
}

impl InductionConfig {
    pub fn validate(&self) -> Result<(), InductionError> {
        if self.max_literals_per_clause == 0
            || self.max_clauses_per_rule == 0
            || self.min_clause_positive_coverage == 0
        {
            return Err(InductionError::BadConfig(
                "all bounds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Gain bookkeeping for one candidate literal at one growth step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiteralGain<F> {
    pub literal: Literal,
    /// Positives covered both before and after adding the literal.
    pub t: usize,
    pub p0: usize,
    pub n0: usize,
    pub p1: usize,
    pub n1: usize,
    pub gain: F,
}

/// FOIL information gain `t * (log2(p1/(p1+n1)) - log2(p0/(p0+n0)))` with
/// `t = p1`. A literal covering no positives scores negative infinity.
pub fn foil_gain<F: Scalar>(p0: usize, n0: usize, p1: usize, n1: usize) -> F {
    if p1 == 0 || p0 == 0 {
        return F::neg_infinity();
    }
    let info = |p: usize, n: usize| (F::from_count(p) / F::from_count(p + n)).log2();
    F::from_count(p1) * (info(p1, n1) - info(p0, n0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InductionWarning {
    /// The class had no labeled positives; its rule holds only locked clauses.
    EmptyClass { class: String },
}

/// Candidate literals with their truth over the positive and negative examples.
struct Candidates {
    literals: Vec<Literal>,
    pos: Vec<Bits>,
    neg: Vec<Bits>,
}

impl Candidates {
    fn build(
        vocab: &[PredicateAtom],
        positives: &[&ImageRecord],
        negatives: &[&ImageRecord],
        ocfg: &OverlapConfig,
    ) -> Self {
        let mut atoms: Vec<(String, PredicateAtom)> = vocab
            .iter()
            .map(|a| {
                let a = a.canonicalize();
                (a.canonical_string(), a)
            })
            .collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        atoms.dedup_by(|a, b| a.0 == b.0);

        let mut literals = Vec::with_capacity(atoms.len() * 2);
        let mut pos = Vec::with_capacity(atoms.len() * 2);
        let mut neg = Vec::with_capacity(atoms.len() * 2);
        for (_, atom) in atoms {
            let p = Bits::from_fn(positives.len(), |i| atom.eval(positives[i], ocfg));
            let n = Bits::from_fn(negatives.len(), |i| atom.eval(negatives[i], ocfg));
            literals.push(Literal::neg(atom.clone()));
            pos.push(p.not());
            neg.push(n.not());
            literals.push(Literal::pos(atom));
            pos.push(p);
            neg.push(n);
        }
        // Tie-break order is the canonical literal string.
        let mut order: Vec<usize> = (0..literals.len()).collect();
        order.sort_by_key(|&i| literals[i].canonical_string());
        Candidates {
            literals: order.iter().map(|&i| literals[i].clone()).collect(),
            pos: order.iter().map(|&i| pos[i].clone()).collect(),
            neg: order.iter().map(|&i| neg[i].clone()).collect(),
        }
    }

    fn covers(
        &self,
        clause: &Clause,
        positives: &[&ImageRecord],
        negatives: &[&ImageRecord],
        ocfg: &OverlapConfig,
    ) -> (Bits, Bits) {
        (
            Bits::from_fn(positives.len(), |i| clause.eval(positives[i], ocfg)),
            Bits::from_fn(negatives.len(), |i| clause.eval(negatives[i], ocfg)),
        )
    }
}

struct Frame {
    pos: Bits,
    neg: Bits,
    excluded: BTreeSet<usize>,
}

struct Grown {
    clause: Clause,
    covered_pos: Bits,
}

/// Grows one clause from the `uncovered` positives against all negatives.
/// Clauses whose form is in `forbidden` are discarded and search resumes one
/// literal earlier with that literal excluded. Only when that search yields
/// no pure clause are forbidden pure clauses specialized instead.
fn grow_clause(
    cands: &Candidates,
    uncovered: &Bits,
    n_neg: usize,
    forbidden: &BTreeSet<String>,
    cfg: &InductionConfig,
) -> Option<Grown> {
    let plain = grow_clause_with(cands, uncovered, n_neg, forbidden, cfg, false);
    if plain.as_ref().is_some_and(|g| !g.clause.impure) {
        return plain;
    }
    match grow_clause_with(cands, uncovered, n_neg, forbidden, cfg, true) {
        Some(g) if !g.clause.impure => Some(g),
        other => plain.or(other),
    }
}

fn grow_clause_with(
    cands: &Candidates,
    uncovered: &Bits,
    n_neg: usize,
    forbidden: &BTreeSet<String>,
    cfg: &InductionConfig,
    specialize: bool,
) -> Option<Grown> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut frames = vec![Frame {
        pos: uncovered.clone(),
        neg: Bits::ones(n_neg),
        excluded: BTreeSet::new(),
    }];
    loop {
        let top = frames.last().expect("root frame");
        let depth = chosen.len();
        let pure = depth > 0 && top.neg.is_empty();
        let next = if pure || depth >= cfg.max_literals_per_clause {
            None
        } else {
            best_literal(cands, top, &chosen, cfg.max_literals_per_clause - depth)
        };
        if let Some(idx) = next {
            let frame = Frame {
                pos: top.pos.and(&cands.pos[idx]),
                neg: top.neg.and(&cands.neg[idx]),
                excluded: BTreeSet::new(),
            };
            chosen.push(idx);
            frames.push(frame);
            continue;
        }
        if depth == 0 {
            return None;
        }
        let mut clause =
            Clause::new(chosen.iter().map(|&i| cands.literals[i].clone())).expect("non-empty");
        if forbidden.contains(&clause.canonical_form()) {
            if specialize && pure && depth < cfg.max_literals_per_clause {
                if let Some(idx) = best_specialization(cands, top, &chosen) {
                    let frame = Frame {
                        pos: top.pos.and(&cands.pos[idx]),
                        neg: top.neg.clone(),
                        excluded: BTreeSet::new(),
                    };
                    chosen.push(idx);
                    frames.push(frame);
                    continue;
                }
            }
            let last = chosen.pop().expect("depth > 0");
            frames.pop();
            frames.last_mut().expect("root frame").excluded.insert(last);
            continue;
        }
        let top = frames.last().expect("root frame");
        clause.impure = !top.neg.is_empty();
        return Some(Grown {
            clause,
            covered_pos: top.pos.clone(),
        });
    }
}

/// Highest-gain literal extending the clause. On a plateau where no single
/// literal has positive gain (XOR-like data), looks one step ahead and returns
/// the first literal of the best positive-gain pair, if `room` allows two.
fn best_literal(cands: &Candidates, frame: &Frame, chosen: &[usize], room: usize) -> Option<usize> {
    let p0 = frame.pos.count();
    let n0 = frame.neg.count();
    let usable = |idx: usize, taken: &[usize]| {
        !frame.excluded.contains(&idx)
            && !taken
                .iter()
                .any(|&c| cands.literals[c].atom == cands.literals[idx].atom)
    };
    let mut best: Option<(usize, f64)> = None;
    for idx in (0..cands.literals.len()).filter(|&i| usable(i, chosen)) {
        let p1 = frame.pos.and_count(&cands.pos[idx]);
        let n1 = frame.neg.and_count(&cands.neg[idx]);
        let gain: f64 = foil_gain(p0, n0, p1, n1);
        if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
            best = Some((idx, gain));
        }
    }
    if best.is_some() || room < 2 {
        return best.map(|(i, _)| i);
    }
    let mut taken = chosen.to_vec();
    for first in (0..cands.literals.len()).filter(|&i| usable(i, chosen)) {
        let pos = frame.pos.and(&cands.pos[first]);
        let neg = frame.neg.and(&cands.neg[first]);
        taken.push(first);
        for second in (0..cands.literals.len()).filter(|&i| usable(i, &taken)) {
            let p2 = pos.and_count(&cands.pos[second]);
            let n2 = neg.and_count(&cands.neg[second]);
            let gain: f64 = foil_gain(p0, n0, p2, n2);
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((first, gain));
            }
        }
        taken.pop();
    }
    best.map(|(i, _)| i)
}

/// Literal keeping the most positives of a pure clause (ties by canonical
/// string); every such literal has zero gain, so coverage decides.
fn best_specialization(cands: &Candidates, frame: &Frame, chosen: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for idx in 0..cands.literals.len() {
        if frame.excluded.contains(&idx)
            || chosen
                .iter()
                .any(|&c| cands.literals[c].atom == cands.literals[idx].atom)
        {
            continue;
        }
        let p1 = frame.pos.and_count(&cands.pos[idx]);
        if p1 > 0 && best.is_none_or(|(_, p)| p1 > p) {
            best = Some((idx, p1));
        }
    }
    best.map(|(i, _)| i)
}

/// Gains of every candidate literal when extending `partial` (which may be
/// empty) against the given examples, in canonical literal order.
pub fn literal_gains<F: Scalar>(
    partial: &[Literal],
    positives: &[&ImageRecord],
    negatives: &[&ImageRecord],
    vocab: &[PredicateAtom],
    ocfg: &OverlapConfig,
) -> Vec<LiteralGain<F>> {
    let cands = Candidates::build(vocab, positives, negatives, ocfg);
    let holds = |img: &ImageRecord| partial.iter().all(|l| l.eval(img, ocfg));
    let pos = Bits::from_fn(positives.len(), |i| holds(positives[i]));
    let neg = Bits::from_fn(negatives.len(), |i| holds(negatives[i]));
    let (p0, n0) = (pos.count(), neg.count());
    cands
        .literals
        .iter()
        .enumerate()
        .filter(|(_, l)| !partial.iter().any(|p| p.atom == l.atom))
        .map(|(i, l)| {
            let p1 = pos.and_count(&cands.pos[i]);
            let n1 = neg.and_count(&cands.neg[i]);
            LiteralGain {
                literal: l.clone(),
                t: p1,
                p0,
                n0,
                p1,
                n1,
                gain: foil_gain(p0, n0, p1, n1),
            }
        })
        .collect()
}

/// Induces the rule for one class from labeled positives and negatives.
///
/// Locked clauses come first, verbatim; sequential covering then adds clauses
/// for the positives they leave uncovered. No emitted clause has a form in
/// `banned`.
#[allow(clippy::too_many_arguments)]
pub fn induce_rule(
    class: &str,
    positives: &[&ImageRecord],
    negatives: &[&ImageRecord],
    vocab: &[PredicateAtom],
    locked: &[Clause],
    banned: &BTreeSet<String>,
    cfg: &InductionConfig,
    ocfg: &OverlapConfig,
) -> Result<Rule, InductionError> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(InductionError::NoPositives(class.to_string()));
    }
    if vocab.is_empty() {
        return Err(InductionError::EmptyVocabulary);
    }
    let mut rule = locked_prefix(class, locked, banned)?;
    let cands = Candidates::build(vocab, positives, negatives, ocfg);

    let mut forbidden = banned.clone();
    let mut uncovered = Bits::ones(positives.len());
    for c in &rule.clauses {
        forbidden.insert(c.canonical_form());
        let (p, _) = cands.covers(c, positives, negatives, ocfg);
        uncovered = uncovered.and_not(&p);
    }

    while !uncovered.is_empty() && rule.clauses.len() < cfg.max_clauses_per_rule {
        let Some(grown) = grow_clause(&cands, &uncovered, negatives.len(), &forbidden, cfg) else {
            break;
        };
        if grown.covered_pos.count() < cfg.min_clause_positive_coverage {
            break;
        }
        uncovered = uncovered.and_not(&grown.covered_pos);
        forbidden.insert(grown.clause.canonical_form());
        rule.clauses.push(grown.clause);
    }
    Ok(rule)
}

fn locked_prefix(
    class: &str,
    locked: &[Clause],
    banned: &BTreeSet<String>,
) -> Result<Rule, InductionError> {
    let mut rule = Rule::new(class);
    let mut seen = BTreeSet::new();
    for c in locked {
        let form = c.canonical_form();
        if banned.contains(&form) {
            return Err(InductionError::LockedAndBanned {
                class: class.to_string(),
                form,
            });
        }
        if seen.insert(form) {
            rule.clauses
                .push(c.clone().with_status(ClauseStatus::Locked));
        }
    }
    Ok(rule)
}

/// One-vs-rest induction for every class from the manual labels.
///
/// Positives of a class are its manually labeled pool images; negatives are
/// the manually labeled images of every other class. Locked clauses and
/// banned registries carry over from `prev`; the generation advances by one.
pub fn induce_ruleset(
    labeled: &BTreeMap<String, String>,
    ds: &Dataset,
    prev: &RuleSet,
    cfg: &InductionConfig,
) -> Result<(RuleSet, Vec<InductionWarning>), InductionError> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(InductionError::NoLabels);
    }
    for (id, label) in labeled {
        if ds.pool_image(id).is_none() {
            return Err(InductionError::UnknownImage(id.clone()));
        }
        if !ds.has_class(label) {
            return Err(InductionError::UnknownClass {
                image: id.clone(),
                label: label.clone(),
            });
        }
    }
    let vocab = ds.pool_vocabulary();
    let mut warnings = Vec::new();
    let mut rules = Vec::with_capacity(ds.classes.len());
    for class in &ds.classes {
        let banned = prev.banned_forms(class);
        let locked: Vec<Clause> = prev
            .rule(class)
            .map(|r| r.locked_clauses().cloned().collect())
            .unwrap_or_default();
        let (mut positives, mut negatives) = (Vec::new(), Vec::new());
        for img in &ds.pool {
            match labeled.get(&img.image_id) {
                Some(l) if l == class => positives.push(img),
                Some(_) => negatives.push(img),
                None => {}
            }
        }
        let rule = if positives.is_empty() || vocab.is_empty() {
            if positives.is_empty() {
                warnings.push(InductionWarning::EmptyClass {
                    class: class.clone(),
                });
            }
            locked_prefix(class, &locked, &banned)?
        } else {
            induce_rule(
                class,
                &positives,
                &negatives,
                &vocab,
                &locked,
                &banned,
                cfg,
                &ds.overlap,
            )?
        };
        rules.push(rule);
    }
    let banned = prev
        .banned
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok((
        RuleSet {
            rules,
            banned,
            generation: prev.generation + 1,
        },
        warnings,
    ))
}
