use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::HoldoutExample;
use crate::labels::LabelStatus;
use crate::num::Scalar;
use crate::predicate::OverlapConfig;
use crate::rules::RuleSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy<F> {
    pub correct: usize,
    pub total: usize,
    pub accuracy: F,
}

/// Holdout accuracy of a ruleset, overall and per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport<F> {
    pub overall: F,
    pub per_class: BTreeMap<String, ClassAccuracy<F>>,
    pub generation: u64,
}

impl<F: Scalar> AccuracyReport<F> {
    /// A report with every class at zero.
    pub fn empty<S: AsRef<str>>(classes: &[S], generation: u64) -> Self {
        AccuracyReport {
            overall: F::zero(),
            per_class: classes
                .iter()
                .map(|c| {
                    (
                        c.as_ref().to_string(),
                        ClassAccuracy {
                            correct: 0,
                            total: 0,
                            accuracy: F::zero(),
                        },
                    )
                })
                .collect(),
            generation,
        }
    }

    pub fn total_correct(&self) -> usize {
        self.per_class.values().map(|c| c.correct).sum()
    }

    pub fn total(&self) -> usize {
        self.per_class.values().map(|c| c.total).sum()
    }
}

fn ratio<F: Scalar>(num: usize, den: usize) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::from_count(num) / F::from_count(den)
    }
}

/// An image counts as correct only when exactly its true class matches;
/// unmatched and ambiguous images count as wrong.
pub fn holdout_accuracy<F: Scalar>(
    rs: &RuleSet,
    holdout: &[HoldoutExample],
    cfg: &OverlapConfig,
) -> AccuracyReport<F> {
    let mut counts: BTreeMap<String, (usize, usize)> = rs
        .rules
        .iter()
        .map(|r| (r.class_name.clone(), (0, 0)))
        .collect();
    for ex in holdout {
        let status = LabelStatus::from_matches(rs.matching_classes(&ex.image, cfg));
        let e = counts.entry(ex.label.clone()).or_default();
        e.1 += 1;
        if status.label() == Some(ex.label.as_str()) {
            e.0 += 1;
        }
    }
    let (correct, total) = counts
        .values()
        .fold((0, 0), |(c, t), &(c2, t2)| (c + c2, t + t2));
    AccuracyReport {
        overall: ratio(correct, total),
        per_class: counts
            .into_iter()
            .map(|(k, (c, t))| {
                (
                    k,
                    ClassAccuracy {
                        correct: c,
                        total: t,
                        accuracy: ratio(c, t),
                    },
                )
            })
            .collect(),
        generation: rs.generation,
    }
}
