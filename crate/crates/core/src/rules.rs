//! The DNF rule algebra: literals, conjunctive clauses, per-class disjunctions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::RuleError;
use crate::predicate::{eval_atom, ImageRecord, OverlapConfig, PredicateAtom};

/// A possibly negated predicate atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LiteralWire", into = "LiteralWire")]
pub struct Literal {
    pub atom: PredicateAtom,
    pub negated: bool,
}

#[derive(Serialize, Deserialize)]
struct LiteralWire {
    kind: String,
    args: Vec<Value>,
    #[serde(default)]
    negated: bool,
}

impl TryFrom<LiteralWire> for Literal {
    type Error = RuleError;

    fn try_from(w: LiteralWire) -> Result<Self, Self::Error> {
        Ok(Literal {
            atom: PredicateAtom::from_wire(&w.kind, &w.args)?,
            negated: w.negated,
        })
    }
}

impl From<Literal> for LiteralWire {
    fn from(l: Literal) -> Self {
        LiteralWire {
            kind: l.atom.kind_name().to_string(),
            args: l.atom.wire_args(),
            negated: l.negated,
        }
    }
}

impl Literal {
    pub fn pos(atom: PredicateAtom) -> Self {
        Literal {
            atom: atom.canonicalize(),
            negated: false,
        }
    }

    pub fn neg(atom: PredicateAtom) -> Self {
        Literal {
            atom: atom.canonicalize(),
            negated: true,
        }
    }

    pub fn negate(&self) -> Self {
        Literal {
            atom: self.atom.clone(),
            negated: !self.negated,
        }
    }

    pub fn eval(&self, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
        eval_atom(&self.atom, img, cfg) != self.negated
    }

    pub fn canonical_string(&self) -> String {
        if self.negated {
            format!("!{}", self.atom.canonical_string())
        } else {
            self.atom.canonical_string()
        }
    }

    /// Key used to order literals inside a canonical clause.
    pub(crate) fn sort_key(&self) -> (String, bool) {
        (self.atom.canonical_string(), self.negated)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseStatus {
    #[default]
    Normal,
    Locked,
    Banned,
}

/// A non-empty conjunction of distinct literals.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(try_from = "ClauseWire")]
pub struct Clause {
    literals: Vec<Literal>,
    pub status: ClauseStatus,
    /// Emitted by induction while still covering negatives.
    pub impure: bool,
}

#[derive(Deserialize)]
struct ClauseWire {
    literals: Vec<Literal>,
    #[serde(default)]
    status: ClauseStatus,
    #[serde(default)]
    impure: bool,
}

impl TryFrom<ClauseWire> for Clause {
    type Error = RuleError;

    fn try_from(w: ClauseWire) -> Result<Self, Self::Error> {
        let mut c = Clause::new(w.literals)?;
        c.status = w.status;
        c.impure = w.impure;
        Ok(c)
    }
}

impl Clause {
    /// Builds a normal clause, dropping repeated literals (first occurrence wins).
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self, RuleError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for l in literals {
            let l = Literal {
                atom: l.atom.canonicalize(),
                negated: l.negated,
            };
            if seen.insert(l.sort_key()) {
                out.push(l);
            }
        }
        if out.is_empty() {
            return Err(RuleError::EmptyClause);
        }
        Ok(Clause {
            literals: out,
            status: ClauseStatus::Normal,
            impure: false,
        })
    }

    pub fn with_status(mut self, status: ClauseStatus) -> Self {
        self.status = status;
        self
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.literals.iter().any(|l| l == lit)
    }

    pub fn is_locked(&self) -> bool {
        self.status == ClauseStatus::Locked
    }

    pub fn is_banned(&self) -> bool {
        self.status == ClauseStatus::Banned
    }

    pub fn eval(&self, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
        self.literals.iter().all(|l| l.eval(img, cfg))
    }

    pub fn satisfied_count(&self, img: &ImageRecord, cfg: &OverlapConfig) -> usize {
        self.literals.iter().filter(|l| l.eval(img, cfg)).count()
    }

    pub fn canonical_form(&self) -> String {
        canonical_form(self)
    }

    /// Replaces the literal list, keeping status; the result must stay non-empty.
    pub(crate) fn with_literals(&self, literals: Vec<Literal>) -> Result<Self, RuleError> {
        let mut c = Clause::new(literals)?;
        c.status = self.status;
        c.impure = self.impure;
        Ok(c)
    }
}

impl Serialize for Clause {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Clause", 3)?;
        st.serialize_field("literals", &self.literals)?;
        st.serialize_field("status", &self.status)?;
        st.serialize_field("impure", &self.impure)?;
        st.end()
    }
}

/// Order- and duplicate-insensitive identity of a clause.
pub fn canonical_form(c: &Clause) -> String {
    let mut keyed: Vec<((String, bool), String)> = c
        .literals
        .iter()
        .map(|l| (l.sort_key(), l.canonical_string()))
        .collect();
    keyed.sort();
    keyed.dedup();
    keyed
        .into_iter()
        .map(|(_, s)| s)
        .collect::<Vec<_>>()
        .join(" & ")
}

pub fn eval_clause(c: &Clause, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
    c.eval(img, cfg)
}

/// Disjunction of clauses for one class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    #[serde(rename = "class")]
    pub class_name: String,
    pub clauses: Vec<Clause>,
}

impl Rule {
    pub fn new(class_name: impl Into<String>) -> Self {
        Rule {
            class_name: class_name.into(),
            clauses: Vec::new(),
        }
    }

    pub fn with_clause(mut self, clause: Clause) -> Self {
        self.clauses.push(clause);
        self
    }

    /// True iff some non-banned clause holds.
    pub fn matches(&self, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
        self.active_clauses().any(|c| c.eval(img, cfg))
    }

    pub fn active_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.is_banned())
    }

    pub fn locked_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.is_locked())
    }

    pub fn position_of_form(&self, form: &str) -> Option<usize> {
        self.clauses.iter().position(|c| c.canonical_form() == form)
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        let mut forms = BTreeSet::new();
        for c in &self.clauses {
            let f = c.canonical_form();
            if !forms.insert(f.clone()) {
                return Err(RuleError::DuplicateClause {
                    class: self.class_name.clone(),
                    form: f,
                });
            }
        }
        Ok(())
    }
}

pub fn eval_rule(r: &Rule, img: &ImageRecord, cfg: &OverlapConfig) -> bool {
    r.matches(img, cfg)
}

/// One rule per class plus the per-class banned registries.
///
/// Banned-status clauses may remain visible inside a rule (they are skipped
/// by evaluation); an active clause never carries a banned form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub banned: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub generation: u64,
}

impl RuleSet {
    /// Empty rules for each class, generation 0.
    pub fn empty<S: AsRef<str>>(classes: &[S]) -> Self {
        RuleSet {
            rules: classes.iter().map(|c| Rule::new(c.as_ref())).collect(),
            banned: BTreeMap::new(),
            generation: 0,
        }
    }

    pub fn rule(&self, class: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.class_name == class)
    }

    pub fn rule_mut(&mut self, class: &str) -> Option<&mut Rule> {
        self.rules.iter_mut().find(|r| r.class_name == class)
    }

    pub fn banned_forms(&self, class: &str) -> BTreeSet<String> {
        self.banned.get(class).cloned().unwrap_or_default()
    }

    pub fn is_banned(&self, class: &str, form: &str) -> bool {
        self.banned.get(class).is_some_and(|s| s.contains(form))
    }

    /// Classes whose rule matches `img`, in rule order.
    pub fn matching_classes<'a>(&'a self, img: &ImageRecord, cfg: &OverlapConfig) -> Vec<&'a str> {
        self.rules
            .iter()
            .filter(|r| r.matches(img, cfg))
            .map(|r| r.class_name.as_str())
            .collect()
    }

    /// Checks class coverage and clause invariants against a class list.
    pub fn validate<S: AsRef<str>>(&self, classes: &[S]) -> Result<(), RuleError> {
        let want: BTreeSet<&str> = classes.iter().map(|c| c.as_ref()).collect();
        let have: BTreeSet<&str> = self.rules.iter().map(|r| r.class_name.as_str()).collect();
        if want != have || self.rules.len() != classes.len() {
            return Err(RuleError::ClassMismatch(format!(
                "expected {want:?}, found {:?}",
                self.rules.iter().map(|r| &r.class_name).collect::<Vec<_>>()
            )));
        }
        if let Some(extra) = self.banned.keys().find(|k| !want.contains(k.as_str())) {
            return Err(RuleError::ClassMismatch(format!(
                "banned registry names unknown class `{extra}`"
            )));
        }
        for r in &self.rules {
            r.validate()?;
            for c in r.active_clauses() {
                let f = c.canonical_form();
                if self.is_banned(&r.class_name, &f) {
                    return Err(RuleError::ActiveBannedClause {
                        class: r.class_name.clone(),
                        form: f,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("ruleset serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::BBox;

    fn cfg() -> OverlapConfig {
        OverlapConfig::default()
    }

    fn table() -> PredicateAtom {
        PredicateAtom::has_object("table")
    }

    fn cabinet() -> PredicateAtom {
        PredicateAtom::has_object("cabinet")
    }

    #[test]
    fn table_but_no_cabinet() {
        let c = Clause::new([Literal::pos(table()), Literal::neg(cabinet())]).unwrap();
        let img = ImageRecord::new("i").with_objects("table", 1);
        assert!(c.eval(&img, &cfg()));
        let with_cab = img.with_objects("cabinet", 1);
        assert!(!c.eval(&with_cab, &cfg()));
    }

    #[test]
    fn person_microphone_overlap() {
        let c = Clause::new([
            Literal::pos(PredicateAtom::has_object("person")),
            Literal::pos(PredicateAtom::has_object("microphone")),
            Literal::pos(PredicateAtom::overlaps("person", "microphone")),
        ])
        .unwrap();
        let img = ImageRecord::new("i")
            .with_object("person", BBox::new(0.0, 0.0, 50.0, 100.0))
            .with_object("microphone", BBox::new(20.0, 20.0, 5.0, 10.0));
        assert!(c.eval(&img, &cfg()));
    }

    #[test]
    fn negating_one_literal_flips_clause() {
        let img = ImageRecord::new("i")
            .with_objects("table", 1)
            .with_attribute("bright");
        let lits = vec![
            Literal::pos(table()),
            Literal::pos(PredicateAtom::has_attribute("bright")),
        ];
        assert!(Clause::new(lits.clone()).unwrap().eval(&img, &cfg()));
        for i in 0..lits.len() {
            let mut flipped = lits.clone();
            flipped[i] = flipped[i].negate();
            assert!(!Clause::new(flipped).unwrap().eval(&img, &cfg()));
        }
    }

    #[test]
    fn empty_rule_matches_nothing() {
        let r = Rule::new("x");
        assert!(!r.matches(&ImageRecord::new("i"), &cfg()));
        let banned_only = Rule::new("x").with_clause(
            Clause::new([Literal::neg(table())])
                .unwrap()
                .with_status(ClauseStatus::Banned),
        );
        assert!(!banned_only.matches(&ImageRecord::new("i"), &cfg()));
    }

    #[test]
    fn canonical_form_is_order_and_duplicate_insensitive() {
        let a = Clause::new([Literal::neg(cabinet()), Literal::pos(table())]).unwrap();
        let b = Clause::new([Literal::pos(table()), Literal::neg(cabinet())]).unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
        let dup = Clause::new([Literal::pos(table()), Literal::pos(table())]).unwrap();
        assert_eq!(
            canonical_form(&dup),
            canonical_form(&Clause::new([Literal::pos(table())]).unwrap())
        );
        let o1 = Clause::new([Literal::pos(PredicateAtom::overlaps(
            "microphone",
            "person",
        ))])
        .unwrap();
        let o2 = Clause::new([Literal::pos(PredicateAtom::overlaps(
            "person",
            "microphone",
        ))])
        .unwrap();
        assert_eq!(canonical_form(&o1), canonical_form(&o2));
    }

    #[test]
    fn empty_clause_rejected() {
        assert_eq!(Clause::new(Vec::new()).unwrap_err(), RuleError::EmptyClause);
        let bad: Result<Clause, _> =
            serde_json::from_str(r#"{"literals": [], "status": "normal"}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn rule_wire_format() {
        let r = Rule::new("conference room")
            .with_clause(Clause::new([Literal::pos(table()), Literal::neg(cabinet())]).unwrap());
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "class": "conference room",
                "clauses": [{
                    "literals": [
                        {"kind": "count_at_least", "args": ["table", 1], "negated": false},
                        {"kind": "count_at_least", "args": ["cabinet", 1], "negated": true}
                    ],
                    "status": "normal",
                    "impure": false
                }]
            })
        );
        let back: Rule = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn ruleset_validation() {
        let mut rs = RuleSet::empty(&["a", "b"]);
        assert!(rs.validate(&["a", "b"]).is_ok());
        assert!(rs.validate(&["a", "c"]).is_err());
        let c = Clause::new([Literal::pos(table())]).unwrap();
        rs.rule_mut("a").unwrap().clauses.push(c.clone());
        rs.banned
            .entry("a".into())
            .or_default()
            .insert(c.canonical_form());
        assert!(matches!(
            rs.validate(&["a", "b"]),
            Err(RuleError::ActiveBannedClause { .. })
        ));
        rs.rule_mut("a").unwrap().clauses[0].status = ClauseStatus::Banned;
        assert!(rs.validate(&["a", "b"]).is_ok());
    }
}
