//! Scripted-oracle labeling sessions.
//!
//! An oracle that knows the ground truth plays the human: each iteration it
//! labels a batch of images, corrects some wrong auto labels, and runs
//! auto-labeling. Accuracy comes from the session's own holdout report.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rulelab_core::{Dataset, LabelStatus};
use rulelab_session::{SessionConfig, SessionError, SessionState};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationPolicy {
    pub label_budget_per_iter: usize,
    /// Label suggested images first; otherwise label in seeded random order.
    pub follow_suggestions: bool,
    pub correct_misclassified: usize,
    pub max_iterations: usize,
    pub target_accuracy: f64,
    pub seed: u64,
}

impl Default for SimulationPolicy {
    fn default() -> Self {
        SimulationPolicy {
            label_budget_per_iter: 6,
            follow_suggestions: true,
            correct_misclassified: 0,
            max_iterations: 10,
            target_accuracy: 0.9,
            seed: 0,
        }
    }
}

impl SimulationPolicy {
    pub fn validate(&self) -> Result<(), SessionError> {
        if !(self.target_accuracy > 0.0 && self.target_accuracy <= 1.0) {
            return Err(SessionError::Validation(
                "target_accuracy must be in (0, 1]".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(SessionError::Validation(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: u64,
    pub manual_count: usize,
    pub overall_accuracy: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StoppingReason {
    Target,
    MaxIterations,
    PoolExhausted,
    Failed { code: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy: SimulationPolicy,
    pub pool_size: usize,
    pub rows: Vec<IterationRow>,
    pub stopping_reason: StoppingReason,
}

impl SimulationReport {
    /// Copy with every `wall_ms` zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.wall_ms = 0;
        }
        r
    }

    pub fn final_accuracy(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.overall_accuracy)
    }

    pub fn final_manual_count(&self) -> usize {
        self.rows.last().map_or(0, |r| r.manual_count)
    }

    pub fn reached_target(&self) -> bool {
        self.stopping_reason == StoppingReason::Target
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks that `ground_truth` labels every pool image with a dataset class.
pub fn check_ground_truth(
    ds: &Dataset,
    ground_truth: &BTreeMap<String, String>,
) -> Result<(), SessionError> {
    let missing: Vec<&str> = ds
        .pool
        .iter()
        .map(|i| i.image_id.as_str())
        .filter(|id| !ground_truth.contains_key(*id))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).copied().collect();
        return Err(SessionError::Validation(format!(
            "ground truth is missing {} pool image(s), e.g. {}",
            missing.len(),
            shown.join(", ")
        )));
    }
    if let Some((id, label)) = ground_truth.iter().find(|(_, l)| !ds.has_class(l)) {
        return Err(SessionError::Validation(format!(
            "ground-truth label `{label}` of `{id}` is not a dataset class"
        )));
    }
    Ok(())
}

/// Runs a simulated session. Validation problems are errors; a session that
/// cannot proceed (for example, nothing labeled) ends with
/// [`StoppingReason::Failed`].
pub fn simulate(
    dataset: Dataset,
    ground_truth: &BTreeMap<String, String>,
    policy: &SimulationPolicy,
    config: SessionConfig,
) -> Result<SimulationReport, SessionError> {
    policy.validate()?;
    check_ground_truth(&dataset, ground_truth)?;
    let mut config = config;
    config.active_learning.seed = policy.seed;
    let mut s = SessionState::new(format!("sim-{}", policy.seed), dataset, config)?;
    let pool_size = s.dataset.pool.len();

    // Fallback order: ascending id when following suggestions, else a seeded
    // shuffle.
    let mut order: Vec<String> = s.dataset.pool.iter().map(|i| i.image_id.clone()).collect();
    order.sort();
    if !policy.follow_suggestions {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(policy.seed));
    }

    let mut rows = Vec::new();
    for _ in 0..policy.max_iterations {
        let started = std::time::Instant::now();
        let mut picked: BTreeSet<String> = BTreeSet::new();
        let is_free = |s: &SessionState, id: &str, picked: &BTreeSet<String>| {
            !picked.contains(id) && !s.labels[id].status.is_manual()
        };
        if policy.follow_suggestions {
            for id in &s.suggestions.image_ids {
                if picked.len() < policy.label_budget_per_iter && is_free(&s, id, &picked) {
                    picked.insert(id.clone());
                }
            }
        }
        for id in &order {
            if picked.len() >= policy.label_budget_per_iter {
                break;
            }
            if is_free(&s, id, &picked) {
                picked.insert(id.clone());
            }
        }
        let wrong: Vec<String> = s
            .labels
            .values()
            .filter(|l| matches!(&l.status, LabelStatus::Auto { label } if ground_truth[&l.image_id] != *label))
            .map(|l| l.image_id.clone())
            .filter(|id| !picked.contains(id))
            .take(policy.correct_misclassified)
            .collect();
        for id in picked.iter().chain(&wrong) {
            s.set_label(id, &ground_truth[id])?;
        }

        let out = match s.run_autolabel(None) {
            Ok(out) => out,
            Err(e) => {
                return Ok(SimulationReport {
                    policy: *policy,
                    pool_size,
                    rows,
                    stopping_reason: StoppingReason::Failed {
                        code: e.code().to_string(),
                        message: e.to_string(),
                    },
                })
            }
        };
        let manual_count = s.progress().manual;
        rows.push(IterationRow {
            iteration: out.generation,
            manual_count,
            overall_accuracy: out.report.overall,
            per_class_accuracy: out
                .report
                .per_class
                .iter()
                .map(|(c, a)| (c.clone(), a.accuracy))
                .collect(),
            wall_ms: started.elapsed().as_millis() as u64,
        });
        let reason = if out.report.overall >= policy.target_accuracy {
            Some(StoppingReason::Target)
        } else if manual_count == pool_size {
            Some(StoppingReason::PoolExhausted)
        } else {
            None
        };
        if let Some(stopping_reason) = reason {
            return Ok(SimulationReport {
                policy: *policy,
                pool_size,
                rows,
                stopping_reason,
            });
        }
    }
    Ok(SimulationReport {
        policy: *policy,
        pool_size,
        rows,
        stopping_reason: StoppingReason::MaxIterations,
    })
}
