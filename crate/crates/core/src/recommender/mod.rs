//! Holdout accuracy, object importance ranking, and image suggestions.

pub mod accuracy;
pub mod importance;
pub mod informativeness;
pub mod kmeans;
pub mod suggest;

pub use accuracy::{holdout_accuracy, AccuracyReport, ClassAccuracy};
pub use importance::{
    compute_importance, rank_objects_for_dropdown, ImportanceTable, ObjectImportance,
};
pub use informativeness::{informativeness, rule_closeness};
pub use kmeans::{kmeans, KMeans};
pub use suggest::{
    feature_vector, ranked_candidates, suggest_images, ActiveLearningConfig, SuggestionSet,
};
