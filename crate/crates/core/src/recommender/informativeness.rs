use crate::num::{mean, Scalar};
use crate::predicate::{ImageRecord, OverlapConfig};
use crate::rules::{Rule, RuleSet};

/// Best fraction of satisfied literals over the rule's active clauses.
pub fn rule_closeness<F: Scalar>(rule: &Rule, img: &ImageRecord, cfg: &OverlapConfig) -> F {
    rule.active_clauses()
        .map(|c| F::from_count(c.satisfied_count(img, cfg)) / F::from_count(c.len()))
        .fold(F::zero(), F::max)
}

/// Number of matching rules plus the mean closeness of the unmatched ones.
///
/// Images matched by exactly one rule are cleanly labeled and are not
/// suggestion candidates, though the score is still defined for them.
pub fn informativeness<F: Scalar>(img: &ImageRecord, rs: &RuleSet, cfg: &OverlapConfig) -> F {
    let (score, _) = informativeness_with_matches(img, rs, cfg);
    score
}

/// Score together with the satisfied-rule count.
pub fn informativeness_with_matches<F: Scalar>(
    img: &ImageRecord,
    rs: &RuleSet,
    cfg: &OverlapConfig,
) -> (F, usize) {
    let mut satisfied = 0usize;
    let mut closeness = Vec::new();
    for rule in &rs.rules {
        if rule.matches(img, cfg) {
            satisfied += 1;
        } else {
            closeness.push(rule_closeness::<F>(rule, img, cfg));
        }
    }
    (F::from_count(satisfied) + mean(&closeness), satisfied)
}
