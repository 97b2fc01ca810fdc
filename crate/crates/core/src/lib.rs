//! Interpretable image labeling rules.
//!
//! Images are described by grounded visual predicates (object counts,
//! pairwise overlaps, attribute tags). Per-class DNF rules are induced from a
//! handful of manual labels with propositional FOIL, applied to the pool, and
//! refined through direct edits. The [`recommender`] module scores rules on
//! a holdout set, ranks objects by TF-IDF importance, and picks informative,
//! diverse images to label next.
//!
//! Numeric outputs are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix them to `f64`.

mod bits;
pub mod dataset;
pub mod edit;
pub mod error;
pub mod induction;
pub mod labels;
pub mod num;
pub mod predicate;
pub mod recommender;
pub mod rules;
pub mod synthetic;

pub use dataset::{ingest_dataset, predicate_vocabulary, Dataset, HoldoutExample, Strictness};
pub use edit::{edit_ruleset, RuleEdit};
pub use error::{EditError, InductionError, IngestError, RuleError};
pub use induction::{foil_gain, induce_rule, induce_ruleset, InductionConfig, InductionWarning};
pub use labels::{apply_ruleset, LabelStatus, StatusKind};
pub use num::Scalar;
pub use predicate::{eval_atom, BBox, DetectedObject, ImageRecord, OverlapConfig, PredicateAtom};
pub use recommender::{
    compute_importance, holdout_accuracy, informativeness, rank_objects_for_dropdown,
    suggest_images, ActiveLearningConfig,
};
pub use rules::{
    canonical_form, eval_clause, eval_rule, Clause, ClauseStatus, Literal, Rule, RuleSet,
};

pub type ImportanceTable = recommender::ImportanceTable<f64>;
pub type ImportanceTable32 = recommender::ImportanceTable<f32>;
pub type AccuracyReport = recommender::AccuracyReport<f64>;
pub type AccuracyReport32 = recommender::AccuracyReport<f32>;
pub type SuggestionSet = recommender::SuggestionSet<f64>;
pub type SuggestionSet32 = recommender::SuggestionSet<f32>;
pub type LiteralGain = induction::LiteralGain<f64>;
pub type LiteralGain32 = induction::LiteralGain<f32>;
