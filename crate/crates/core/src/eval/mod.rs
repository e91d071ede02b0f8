//! Imbalanced-classification metrics, baseline classifiers and the
//! real-versus-augmented evaluation harness.

mod baselines;
mod harness;
mod metrics;

use thiserror::Error;

use crate::tabular::TabularError;

pub use baselines::{train_baseline, BaselineConfig, Classifier, ClassifierKind};
pub use harness::{
    default_minority, evaluate_augmentation, Condition, ConditionRow, MetricSummary, MetricTable, RunMetrics,
};
pub use metrics::{
    classification_metrics, metrics_from_confusion, weighted_mean, ConfusionMatrix, MetricReport, Metrics,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} is outside the class range")]
    UnknownLabel(usize),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown classifier '{0}' (expected logistic or knn)")]
    UnknownClassifier(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}
