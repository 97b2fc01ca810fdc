//! Randomized lock/ban editing scripts with an independent regeneration check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rulelab_core::synthetic::{generate, SyntheticConfig};
use rulelab_core::{
    edit_ruleset, induce_ruleset, Clause, ClauseStatus, InductionConfig, Literal, RuleEdit, RuleSet,
};

use super::oracles::TestRng;

/// What a script did, for reporting.
#[derive(Debug, Default)]
pub struct ScriptStats {
    pub regenerations: usize,
    pub locks: usize,
    pub bans: usize,
}

/// Locked forms of every class before regeneration must reappear, locked, in
/// the regenerated rule; no active clause may carry a banned form.
fn check_regeneration(before: &RuleSet, after: &RuleSet) -> Result<(), String> {
    for rule in &before.rules {
        let regen = after
            .rule(&rule.class_name)
            .ok_or_else(|| format!("class {} vanished", rule.class_name))?;
        let regen_forms: BTreeMap<String, ClauseStatus> = regen
            .clauses
            .iter()
            .map(|c| (c.canonical_form(), c.status))
            .collect();
        for c in rule
            .clauses
            .iter()
            .filter(|c| c.status == ClauseStatus::Locked)
        {
            let form = c.canonical_form();
            if regen_forms.get(&form) != Some(&ClauseStatus::Locked) {
                return Err(format!(
                    "{}: locked `{form}` missing after regeneration",
                    rule.class_name
                ));
            }
        }
        let banned = before
            .banned
            .get(&rule.class_name)
            .cloned()
            .unwrap_or_default();
        for c in &regen.clauses {
            if banned.contains(&c.canonical_form()) && c.status != ClauseStatus::Banned {
                return Err(format!(
                    "{}: banned `{}` regenerated",
                    rule.class_name,
                    c.canonical_form()
                ));
            }
        }
        if after
            .banned
            .get(&rule.class_name)
            .cloned()
            .unwrap_or_default()
            != banned
        {
            return Err(format!("{}: ban registry changed", rule.class_name));
        }
    }
    Ok(())
}

/// Runs one script: induce, then 4 to 8 rounds of random lock, ban, custom
/// locked clause, or extra labels, each followed by regeneration.
pub fn lock_ban_script(seed: u64) -> Result<ScriptStats, String> {
    let mut rng = TestRng::new(seed);
    let task = generate(&SyntheticConfig {
        pool_size: 60,
        holdout_per_class: 2,
        seed,
        ..Default::default()
    })?;
    let ds = task.dataset;
    let ids: Vec<String> = ds.pool.iter().map(|i| i.image_id.clone()).collect();
    let mut labels: BTreeMap<String, String> = BTreeMap::new();
    while labels.len() < 6 {
        let id = &ids[rng.below(ids.len())];
        labels.insert(id.clone(), task.ground_truth[id].clone());
    }
    let cfg = InductionConfig::default();
    let (mut rs, _) = induce_ruleset(&labels, &ds, &RuleSet::empty(&ds.classes), &cfg)
        .map_err(|e| e.to_string())?;
    let mut stats = ScriptStats::default();
    let vocab = ds.pool_vocabulary();

    for _ in 0..4 + rng.below(5) {
        for _ in 0..1 + rng.below(3) {
            let ri = rng.below(rs.rules.len());
            let class = rs.rules[ri].class_name.clone();
            let n = rs.rules[ri].clauses.len();
            let edit = match rng.below(4) {
                0 if n > 0 => RuleEdit::Lock {
                    class,
                    clause: rng.below(n),
                },
                1 if n > 0 => RuleEdit::Ban {
                    class,
                    clause: rng.below(n),
                },
                2 => {
                    let lits: Vec<Literal> = (0..1 + rng.below(2))
                        .map(|_| Literal {
                            atom: vocab[rng.below(vocab.len())].clone(),
                            negated: rng.chance(0.3),
                        })
                        .collect();
                    let clause = Clause::new(lits).map_err(|e| e.to_string())?;
                    match edit_ruleset(
                        &rs,
                        &RuleEdit::AddClause {
                            class: class.clone(),
                            clause,
                        },
                    ) {
                        Ok(next) => {
                            let last = next.rule(&class).unwrap().clauses.len() - 1;
                            rs = next;
                            RuleEdit::Lock {
                                class,
                                clause: last,
                            }
                        }
                        Err(_) => continue,
                    }
                }
                _ => {
                    let id = &ids[rng.below(ids.len())];
                    labels.insert(id.clone(), task.ground_truth[id].clone());
                    continue;
                }
            };
            // locking a banned clause or banning a locked one is rejected
            if let Ok(next) = edit_ruleset(&rs, &edit) {
                match edit {
                    RuleEdit::Lock { .. } => stats.locks += 1,
                    _ => stats.bans += 1,
                }
                rs = next;
            }
        }
        let (next, _) = induce_ruleset(&labels, &ds, &rs, &cfg).map_err(|e| e.to_string())?;
        check_regeneration(&rs, &next)?;
        stats.regenerations += 1;
        rs = next;
    }
    Ok(stats)
}
