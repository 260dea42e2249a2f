//! Screen and application classification.
//!
//! A [`LinearModel`] is a one-vs-rest logistic regression over feature
//! vectors; its per-class scores are turned into a distribution with a
//! softmax. Two compositions are provided: the two-stage
//! [`HierarchicalClassifier`] (screen gate, then a 4-way application model)
//! and a flat 5-way model ([`classify_flat`]).

mod hierarchical;
mod label;
mod linear;
mod scores;

pub use hierarchical::{
    classify_flat, Classifier, HierarchicalClassifier, HierarchicalOutcome,
    DEFAULT_SCREEN_THRESHOLD,
};
pub use label::{ClassLabel, ModelClass};
pub use linear::{
    load_model, save_model, train, train_with_history, Example, LinearModel, TrainConfig,
    TrainMeta, MODEL_VERSION,
};
pub use scores::{ingest_external_scores, parse_scores, write_scores, ScoredRecord, SCORES_HEADER};

use thiserror::Error;

use crate::features::FeatureError;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("class {0} has no training examples")]
    EmptyClass(ModelClass),
    #[error("label {0} is not covered by any model class")]
    UncoveredLabel(ClassLabel),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("bad scores row at line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
