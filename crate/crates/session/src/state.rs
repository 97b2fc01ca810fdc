//! Session state machine.
//!
//! Every mutation is recorded as a [`SessionEvent`]. Live operations and
//! replay both go through the same effect function, so replaying a log onto
//! the initial state rebuilds the live state byte for byte.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rulelab_core::recommender::ImportanceTable as ImportanceTableOf;
use rulelab_core::{
    apply_ruleset, compute_importance, edit_ruleset, holdout_accuracy, induce_ruleset,
    suggest_images, AccuracyReport, ActiveLearningConfig, Dataset, ImportanceTable,
    InductionConfig, InductionWarning, LabelStatus, RuleEdit, RuleSet, StatusKind, SuggestionSet,
};
use serde::{Deserialize, Serialize};

use crate::error::SessionError;
use crate::export::{ExportDocument, ExportSummary};

/// Induction and suggestion settings used by auto-labeling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub induction: InductionConfig,
    pub active_learning: ActiveLearningConfig,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        self.induction.validate()?;
        self.active_learning
            .validate()
            .map_err(SessionError::Validation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelState {
    pub image_id: String,
    #[serde(flatten)]
    pub status: LabelStatus,
    /// Rule generation current when the status last changed.
    pub updated_generation: u64,
}

/// Label distribution over the pool.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProgressStats {
    pub total: usize,
    pub manual: usize,
    pub auto: usize,
    pub unlabeled: usize,
    pub ambiguous: usize,
    pub manual_fraction: f64,
    pub auto_fraction: f64,
    pub unlabeled_fraction: f64,
    pub ambiguous_fraction: f64,
}

impl ProgressStats {
    pub fn from_statuses<'a>(statuses: impl IntoIterator<Item = &'a LabelStatus>) -> Self {
        let mut s = ProgressStats::default();
        for st in statuses {
            s.total += 1;
            match st.kind() {
                StatusKind::Manual => s.manual += 1,
                StatusKind::Auto => s.auto += 1,
                StatusKind::Unlabeled => s.unlabeled += 1,
                StatusKind::Ambiguous => s.ambiguous += 1,
            }
        }
        if s.total > 0 {
            let n = s.total as f64;
            s.manual_fraction = s.manual as f64 / n;
            s.auto_fraction = s.auto as f64 / n;
            s.unlabeled_fraction = s.unlabeled as f64 / n;
            s.ambiguous_fraction = s.ambiguous as f64 / n;
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    LabelSet {
        image_id: String,
        label: String,
    },
    LabelCleared {
        image_id: String,
    },
    AutoLabelRun {
        config: SessionConfig,
        generation: u64,
        timing_ms: u64,
    },
    RuleEdited {
        edit: RuleEdit,
    },
    Preview {
        candidate: RuleSet,
    },
    Export {
        path: Option<String>,
        exported: usize,
        remainder: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    /// Unix time in milliseconds.
    pub at_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoLabelOutcome {
    pub generation: u64,
    pub report: AccuracyReport,
    pub stats: ProgressStats,
    pub timing_ms: u64,
    pub warnings: Vec<InductionWarning>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreviewOutcome {
    pub report: AccuracyReport,
    pub stats: ProgressStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub dataset: Dataset,
    pub config: SessionConfig,
    pub labels: BTreeMap<String, LabelState>,
    pub ruleset: RuleSet,
    pub importance: ImportanceTable,
    pub suggestions: SuggestionSet,
    pub last_report: AccuracyReport,
    pub last_warnings: Vec<InductionWarning>,
    pub iteration: u64,
    pub event_log: Vec<SessionEvent>,
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl SessionState {
    /// Fresh session: every pool image unlabeled, empty rules at generation 0,
    /// importance computed over the pool.
    pub fn new(
        session_id: impl Into<String>,
        dataset: Dataset,
        config: SessionConfig,
    ) -> Result<Self, SessionError> {
        config.validate()?;
        let ruleset = RuleSet::empty(&dataset.classes);
        let labels = dataset
            .pool
            .iter()
            .map(|img| {
                let ls = LabelState {
                    image_id: img.image_id.clone(),
                    status: LabelStatus::Unlabeled,
                    updated_generation: 0,
                };
                (img.image_id.clone(), ls)
            })
            .collect();
        let importance: ImportanceTableOf<f64> = compute_importance(&dataset.pool);
        let mut s = SessionState {
            session_id: session_id.into(),
            last_report: AccuracyReport::empty(&dataset.classes, 0),
            suggestions: SuggestionSet::empty(0),
            dataset,
            config,
            labels,
            ruleset,
            importance,
            last_warnings: Vec::new(),
            iteration: 0,
            event_log: Vec::new(),
        };
        s.refresh();
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("session state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn manual_labels(&self) -> BTreeMap<String, String> {
        self.labels
            .values()
            .filter_map(|ls| match &ls.status {
                LabelStatus::Manual { label } => Some((ls.image_id.clone(), label.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn progress(&self) -> ProgressStats {
        ProgressStats::from_statuses(self.labels.values().map(|l| &l.status))
    }

    pub fn label(&self, image_id: &str) -> Result<&LabelState, SessionError> {
        self.labels
            .get(image_id)
            .ok_or_else(|| SessionError::UnknownImage(image_id.to_string()))
    }

    pub fn set_label(&mut self, image_id: &str, label: &str) -> Result<&LabelState, SessionError> {
        self.commit(EventKind::LabelSet {
            image_id: image_id.into(),
            label: label.into(),
        })?;
        self.label(image_id)
    }

    pub fn clear_label(&mut self, image_id: &str) -> Result<&LabelState, SessionError> {
        self.commit(EventKind::LabelCleared {
            image_id: image_id.into(),
        })?;
        self.label(image_id)
    }

    /// Induces rules from the manual labels and relabels the pool. `config`
    /// replaces the session config when given.
    pub fn run_autolabel(
        &mut self,
        config: Option<SessionConfig>,
    ) -> Result<AutoLabelOutcome, SessionError> {
        let config = config.unwrap_or(self.config);
        let generation = self.ruleset.generation + 1;
        let started = Instant::now();
        let mut kind = EventKind::AutoLabelRun {
            config,
            generation,
            timing_ms: 0,
        };
        self.apply_effect(&kind)?;
        let elapsed = started.elapsed().as_millis() as u64;
        if let EventKind::AutoLabelRun { timing_ms, .. } = &mut kind {
            *timing_ms = elapsed;
        }
        self.push_event(kind, now_ms());
        Ok(AutoLabelOutcome {
            generation,
            report: self.last_report.clone(),
            stats: self.progress(),
            timing_ms: elapsed,
            warnings: self.last_warnings.clone(),
        })
    }

    /// What accuracy and label distribution `candidate` would give. Only the
    /// event log changes.
    pub fn preview_rules(&mut self, candidate: &RuleSet) -> Result<PreviewOutcome, SessionError> {
        self.commit(EventKind::Preview {
            candidate: candidate.clone(),
        })?;
        Ok(self.evaluate_candidate(candidate))
    }

    fn evaluate_candidate(&self, candidate: &RuleSet) -> PreviewOutcome {
        let ocfg = &self.dataset.overlap;
        let statuses = apply_ruleset(candidate, &self.dataset.pool, &self.manual_labels(), ocfg);
        PreviewOutcome {
            report: holdout_accuracy(candidate, &self.dataset.holdout, ocfg),
            stats: ProgressStats::from_statuses(statuses.values()),
        }
    }

    pub fn apply_rule_edit(&mut self, edit: &RuleEdit) -> Result<&RuleSet, SessionError> {
        self.commit(EventKind::RuleEdited { edit: edit.clone() })?;
        Ok(&self.ruleset)
    }

    /// Builds the export document and, when `path` is given, writes it there
    /// atomically.
    pub fn export_labels(&mut self, path: Option<&Path>) -> Result<ExportSummary, SessionError> {
        let doc = ExportDocument::from_labels(self.labels.values());
        if let Some(p) = path {
            crate::store::write_atomic(p, doc.to_json().as_bytes())?;
        }
        let summary = doc.summary(path.map(|p| p.display().to_string()));
        self.commit(EventKind::Export {
            path: summary.path.clone(),
            exported: summary.exported,
            remainder: summary.remainder,
        })?;
        Ok(summary)
    }

    pub fn export_document(&self) -> ExportDocument {
        ExportDocument::from_labels(self.labels.values())
    }

    fn commit(&mut self, kind: EventKind) -> Result<(), SessionError> {
        self.apply_effect(&kind)?;
        self.push_event(kind, now_ms());
        Ok(())
    }

    fn push_event(&mut self, kind: EventKind, at_ms: u64) {
        let seq = self.event_log.len() as u64;
        self.event_log.push(SessionEvent { seq, at_ms, kind });
    }

    /// Re-applies a recorded event. Fails if it is out of sequence or no
    /// longer applies.
    pub fn replay_event(&mut self, ev: &SessionEvent) -> Result<(), SessionError> {
        if ev.seq != self.event_log.len() as u64 {
            return Err(SessionError::Replay {
                seq: ev.seq,
                reason: format!("expected seq {}", self.event_log.len()),
            });
        }
        self.apply_effect(&ev.kind)
            .map_err(|e| SessionError::Replay {
                seq: ev.seq,
                reason: e.to_string(),
            })?;
        self.event_log.push(ev.clone());
        Ok(())
    }

    /// Replays `events` in order onto `initial`.
    pub fn replay<'a>(
        initial: SessionState,
        events: impl IntoIterator<Item = &'a SessionEvent>,
    ) -> Result<Self, SessionError> {
        let mut s = initial;
        for ev in events {
            s.replay_event(ev)?;
        }
        Ok(s)
    }

    /// State change of one event. Leaves `self` untouched on error.
    fn apply_effect(&mut self, kind: &EventKind) -> Result<(), SessionError> {
        match kind {
            EventKind::LabelSet { image_id, label } => {
                self.label(image_id)?;
                if !self.dataset.has_class(label) {
                    return Err(SessionError::UnknownClass(label.clone()));
                }
                let status = LabelStatus::Manual {
                    label: label.clone(),
                };
                self.set_status(image_id, status);
            }
            EventKind::LabelCleared { image_id } => {
                self.label(image_id)?;
                let img = self
                    .dataset
                    .pool_image(image_id)
                    .expect("labels mirror the pool");
                let status = LabelStatus::from_matches(
                    self.ruleset.matching_classes(img, &self.dataset.overlap),
                );
                self.set_status(image_id, status);
            }
            EventKind::AutoLabelRun {
                config, generation, ..
            } => {
                config.validate()?;
                let (rs, warnings) = induce_ruleset(
                    &self.manual_labels(),
                    &self.dataset,
                    &self.ruleset,
                    &config.induction,
                )?;
                if rs.generation != *generation {
                    return Err(SessionError::Validation(format!(
                        "expected generation {generation}, got {}",
                        rs.generation
                    )));
                }
                self.config = *config;
                self.ruleset = rs;
                self.last_warnings = warnings;
                self.iteration = self.ruleset.generation;
                self.refresh();
            }
            EventKind::RuleEdited { edit } => {
                self.ruleset = edit_ruleset(&self.ruleset, edit)?;
                self.refresh();
            }
            EventKind::Preview { candidate } => {
                candidate.validate(&self.dataset.classes)?;
            }
            EventKind::Export { .. } => {}
        }
        Ok(())
    }

    fn set_status(&mut self, image_id: &str, status: LabelStatus) {
        let generation = self.ruleset.generation;
        let ls = self.labels.get_mut(image_id).expect("checked by caller");
        if ls.status != status {
            ls.status = status;
            ls.updated_generation = generation;
        }
    }

    /// Relabels the pool under the current rules and recomputes the holdout
    /// report and suggestions.
    fn refresh(&mut self) {
        let ocfg = self.dataset.overlap;
        let manual = self.manual_labels();
        for (id, status) in apply_ruleset(&self.ruleset, &self.dataset.pool, &manual, &ocfg) {
            self.set_status(&id, status);
        }
        self.last_report = holdout_accuracy(&self.ruleset, &self.dataset.holdout, &ocfg);
        let vocab = self.dataset.pool_vocabulary();
        self.suggestions = suggest_images(
            &self.dataset.pool,
            &manual,
            &self.ruleset,
            &vocab,
            &self.config.active_learning,
            &ocfg,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rulelab_core::{
        Clause, HoldoutExample, ImageRecord, Literal, OverlapConfig, PredicateAtom,
    };

    fn dataset() -> Dataset {
        let img = |id: &str, t: &str| ImageRecord::new(id).with_objects(t, 1);
        Dataset {
            task_name: "t".into(),
            classes: vec!["a".into(), "b".into()],
            pool: vec![img("1", "x"), img("2", "x"), img("3", "y"), img("4", "y")],
            holdout: vec![HoldoutExample {
                image: img("h", "x"),
                label: "a".into(),
            }],
            overlap: OverlapConfig::default(),
        }
    }

    #[test]
    fn set_and_clear_round_trip() {
        let mut s = SessionState::new("s", dataset(), SessionConfig::default()).unwrap();
        s.set_label("1", "a").unwrap();
        assert_eq!(
            s.label("1").unwrap().status,
            LabelStatus::Manual { label: "a".into() }
        );
        s.clear_label("1").unwrap();
        assert_eq!(s.label("1").unwrap().status, LabelStatus::Unlabeled);
        assert_eq!(s.event_log.len(), 2);
    }

    #[test]
    fn bad_label_requests_leave_state_alone() {
        let mut s = SessionState::new("s", dataset(), SessionConfig::default()).unwrap();
        let before = s.to_json();
        assert!(matches!(
            s.set_label("1", "Mangrve"),
            Err(SessionError::UnknownClass(_))
        ));
        assert!(matches!(
            s.set_label("9", "a"),
            Err(SessionError::UnknownImage(_))
        ));
        assert!(matches!(s.run_autolabel(None), Err(SessionError::NoLabels)));
        assert_eq!(s.to_json(), before);
    }

    #[test]
    fn autolabel_labels_pool_and_keeps_manual() {
        let mut s = SessionState::new("s", dataset(), SessionConfig::default()).unwrap();
        s.set_label("1", "a").unwrap();
        s.set_label("3", "b").unwrap();
        let out = s.run_autolabel(None).unwrap();
        assert_eq!(out.generation, 1);
        assert_eq!(s.iteration, 1);
        assert_eq!(
            s.label("2").unwrap().status,
            LabelStatus::Auto { label: "a".into() }
        );
        assert_eq!(
            s.label("1").unwrap().status,
            LabelStatus::Manual { label: "a".into() }
        );
        assert_eq!(out.report.overall, 1.0);
        let p = s.progress();
        assert_eq!(p.manual + p.auto + p.unlabeled + p.ambiguous, 4);
    }

    #[test]
    fn preview_only_appends_an_event() {
        let mut s = SessionState::new("s", dataset(), SessionConfig::default()).unwrap();
        s.set_label("1", "a").unwrap();
        s.set_label("3", "b").unwrap();
        s.run_autolabel(None).unwrap();
        let mut before = s.clone();
        let committed = s.ruleset.clone();
        let out = s.preview_rules(&committed).unwrap();
        assert_eq!(out.report, s.last_report);
        before.event_log.push(s.event_log.last().unwrap().clone());
        assert_eq!(before.to_json(), s.to_json());

        let mut other = committed.clone();
        other.rules[0] = other.rules[0]
            .clone()
            .with_clause(Clause::new([Literal::pos(PredicateAtom::has_object("y"))]).unwrap());
        let out = s.preview_rules(&other).unwrap();
        // 2 stays `a`, 4 now matches both rules
        assert_eq!((out.stats.auto, out.stats.ambiguous), (1, 1));
        assert_eq!(s.ruleset, committed);
    }

    #[test]
    fn replay_rebuilds_state() {
        let mut s = SessionState::new("s", dataset(), SessionConfig::default()).unwrap();
        let initial = s.clone();
        s.set_label("1", "a").unwrap();
        s.set_label("4", "b").unwrap();
        s.run_autolabel(None).unwrap();
        s.apply_rule_edit(&RuleEdit::Lock {
            class: "a".into(),
            clause: 0,
        })
        .unwrap();
        s.clear_label("4").unwrap();
        let replayed = SessionState::replay(initial, &s.event_log).unwrap();
        assert_eq!(replayed.to_json(), s.to_json());
    }
}
