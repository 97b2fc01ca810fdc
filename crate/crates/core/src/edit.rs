//! Direct rule manipulation: add, edit, remove, lock, ban.

use serde::{Deserialize, Serialize};

use crate::error::EditError;
use crate::rules::{Clause, ClauseStatus, Literal, Rule, RuleSet};

/// A single user edit. Clause and literal indices refer to positions in the
/// current rule for `class`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RuleEdit {
    AddClause {
        class: String,
        clause: Clause,
    },
    AddLiteral {
        class: String,
        clause: usize,
        literal: Literal,
    },
    EditLiteral {
        class: String,
        clause: usize,
        literal_index: usize,
        literal: Literal,
    },
    RemoveLiteral {
        class: String,
        clause: usize,
        literal_index: usize,
    },
    RemoveClause {
        class: String,
        clause: usize,
    },
    Lock {
        class: String,
        clause: usize,
    },
    Unlock {
        class: String,
        clause: usize,
    },
    Ban {
        class: String,
        clause: usize,
    },
    Unban {
        class: String,
        form: String,
    },
    ReplaceRule {
        class: String,
        rule: Rule,
    },
}

impl RuleEdit {
    pub fn class(&self) -> &str {
        match self {
            RuleEdit::AddClause { class, .. }
            | RuleEdit::AddLiteral { class, .. }
            | RuleEdit::EditLiteral { class, .. }
            | RuleEdit::RemoveLiteral { class, .. }
            | RuleEdit::RemoveClause { class, .. }
            | RuleEdit::Lock { class, .. }
            | RuleEdit::Unlock { class, .. }
            | RuleEdit::Ban { class, .. }
            | RuleEdit::Unban { class, .. }
            | RuleEdit::ReplaceRule { class, .. } => class,
        }
    }
}

fn clause_at(rule: &Rule, index: usize) -> Result<&Clause, EditError> {
    rule.clauses.get(index).ok_or(EditError::IndexOutOfRange {
        what: "clause",
        index,
        len: rule.clauses.len(),
    })
}

/// Locked and banned clauses must be unlocked/unbanned before their literals change.
fn editable(c: &Clause) -> Result<(), EditError> {
    match c.status {
        ClauseStatus::Locked => Err(EditError::Locked(c.canonical_form())),
        ClauseStatus::Banned => Err(EditError::Banned(c.canonical_form())),
        ClauseStatus::Normal => Ok(()),
    }
}

/// Rejects a clause whose form collides with another clause of the rule or
/// with the banned registry.
fn check_new_form(
    rs: &RuleSet,
    rule: &Rule,
    skip: Option<usize>,
    c: &Clause,
) -> Result<(), EditError> {
    let form = c.canonical_form();
    if rule
        .clauses
        .iter()
        .enumerate()
        .any(|(i, o)| Some(i) != skip && o.canonical_form() == form)
    {
        return Err(EditError::DuplicateClause(form));
    }
    if c.status != ClauseStatus::Banned && rs.is_banned(&rule.class_name, &form) {
        return Err(EditError::Banned(form));
    }
    Ok(())
}

/// Applies `edit`, returning the new ruleset. The input is left untouched.
pub fn edit_ruleset(rs: &RuleSet, edit: &RuleEdit) -> Result<RuleSet, EditError> {
    let class = edit.class();
    let ri = rs
        .rules
        .iter()
        .position(|r| r.class_name == class)
        .ok_or_else(|| EditError::UnknownClass(class.to_string()))?;
    let mut out = rs.clone();
    let rule = &rs.rules[ri];

    match edit {
        RuleEdit::AddClause { clause, .. } => {
            let c =
                Clause::new(clause.literals().iter().cloned())?.with_status(match clause.status {
                    ClauseStatus::Banned => ClauseStatus::Normal,
                    s => s,
                });
            check_new_form(rs, rule, None, &c)?;
            out.rules[ri].clauses.push(c);
        }
        RuleEdit::AddLiteral {
            clause, literal, ..
        } => {
            let old = clause_at(rule, *clause)?;
            editable(old)?;
            let lit = Literal {
                atom: literal.atom.canonicalize(),
                negated: literal.negated,
            };
            if old.contains(&lit) {
                return Err(EditError::DuplicateLiteral(lit.canonical_string()));
            }
            let mut lits = old.literals().to_vec();
            lits.push(lit);
            let c = old.with_literals(lits)?;
            check_new_form(rs, rule, Some(*clause), &c)?;
            out.rules[ri].clauses[*clause] = c;
        }
        RuleEdit::EditLiteral {
            clause,
            literal_index,
            literal,
            ..
        } => {
            let old = clause_at(rule, *clause)?;
            editable(old)?;
            let len = old.len();
            if *literal_index >= len {
                return Err(EditError::IndexOutOfRange {
                    what: "literal",
                    index: *literal_index,
                    len,
                });
            }
            let lit = Literal {
                atom: literal.atom.canonicalize(),
                negated: literal.negated,
            };
            if old
                .literals()
                .iter()
                .enumerate()
                .any(|(i, l)| i != *literal_index && *l == lit)
            {
                return Err(EditError::DuplicateLiteral(lit.canonical_string()));
            }
            let mut lits = old.literals().to_vec();
            lits[*literal_index] = lit;
            let c = old.with_literals(lits)?;
            check_new_form(rs, rule, Some(*clause), &c)?;
            out.rules[ri].clauses[*clause] = c;
        }
        RuleEdit::RemoveLiteral {
            clause,
            literal_index,
            ..
        } => {
            let old = clause_at(rule, *clause)?;
            editable(old)?;
            let len = old.len();
            if *literal_index >= len {
                return Err(EditError::IndexOutOfRange {
                    what: "literal",
                    index: *literal_index,
                    len,
                });
            }
            if len == 1 {
                return Err(EditError::WouldEmptyClause);
            }
            let mut lits = old.literals().to_vec();
            lits.remove(*literal_index);
            let c = old.with_literals(lits)?;
            check_new_form(rs, rule, Some(*clause), &c)?;
            out.rules[ri].clauses[*clause] = c;
        }
        RuleEdit::RemoveClause { clause, .. } => {
            let old = clause_at(rule, *clause)?;
            if old.is_locked() {
                return Err(EditError::Locked(old.canonical_form()));
            }
            out.rules[ri].clauses.remove(*clause);
        }
        RuleEdit::Lock { clause, .. } => {
            let old = clause_at(rule, *clause)?;
            if old.is_banned() {
                return Err(EditError::LockBanned(old.canonical_form()));
            }
            out.rules[ri].clauses[*clause].status = ClauseStatus::Locked;
        }
        RuleEdit::Unlock { clause, .. } => {
            let old = clause_at(rule, *clause)?;
            if old.is_locked() {
                out.rules[ri].clauses[*clause].status = ClauseStatus::Normal;
            }
        }
        RuleEdit::Ban { clause, .. } => {
            let old = clause_at(rule, *clause)?;
            if old.is_locked() {
                return Err(EditError::Locked(old.canonical_form()));
            }
            out.rules[ri].clauses[*clause].status = ClauseStatus::Banned;
            out.banned
                .entry(class.to_string())
                .or_default()
                .insert(old.canonical_form());
        }
        RuleEdit::Unban { form, .. } => {
            let removed = out.banned.get_mut(class).is_some_and(|s| s.remove(form));
            if !removed {
                return Err(EditError::NotBanned(form.clone()));
            }
            if out.banned.get(class).is_some_and(|s| s.is_empty()) {
                out.banned.remove(class);
            }
            for c in &mut out.rules[ri].clauses {
                if c.is_banned() && c.canonical_form() == *form {
                    c.status = ClauseStatus::Normal;
                }
            }
        }
        RuleEdit::ReplaceRule { rule: new_rule, .. } => {
            if new_rule.class_name != class {
                return Err(EditError::UnknownClass(new_rule.class_name.clone()));
            }
            let mut replaced = Rule::new(class);
            for c in &new_rule.clauses {
                let mut c = c.clone();
                let form = c.canonical_form();
                if c.is_banned() {
                    out.banned
                        .entry(class.to_string())
                        .or_default()
                        .insert(form.clone());
                } else if rs.is_banned(class, &form) {
                    return Err(EditError::Banned(form));
                }
                if replaced.position_of_form(&form).is_some() {
                    return Err(EditError::DuplicateClause(form));
                }
                c.impure = c.impure && !c.is_locked();
                replaced.clauses.push(c);
            }
            out.rules[ri] = replaced;
        }
    }
    debug_assert!(out
        .validate(
            &out.rules
                .iter()
                .map(|r| r.class_name.clone())
                .collect::<Vec<_>>()
        )
        .is_ok());
    Ok(out)
}
