//! Tabular data model: schemas, validated datasets, CSV I/O, deterministic
//! splitting and batching, standardization, and the synthetic benchmark
//! generators.

mod batches;
mod benchmark;
mod csv_io;
mod dataset;
mod schema;
mod split;
mod standardize;

use std::path::PathBuf;

use thiserror::Error;

pub use batches::{partition_batches, stratified_batches, BatchPlan};
pub use benchmark::{benchmark_schema, generate_benchmark, Benchmark};
pub use csv_io::{load_csv, read_csv, to_csv_string, write_csv};
pub use dataset::{class_stats, counts_to_stats, ClassStats, Dataset, Row, Value};
pub use schema::{AttributeKind, AttributeSpec, Schema};
pub use split::train_test_split;
pub use standardize::{standardize, ColumnParams, StandardizationParams};

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("header mismatch: expected [{expected}], found [{found}]")]
    Header { expected: String, found: String },
    #[error("{}row has {found} fields, expected {expected}", fmt_line(*.row))]
    Arity {
        row: Option<usize>,
        expected: usize,
        found: usize,
    },
    #[error("{}cannot parse '{text}' as a number for attribute '{attribute}'", fmt_line(*.row))]
    Numeric {
        row: Option<usize>,
        attribute: String,
        text: String,
    },
    #[error("{}unknown category '{value}' for attribute '{attribute}'", fmt_line(*.row))]
    UnknownCategory {
        row: Option<usize>,
        attribute: String,
        value: String,
    },
    #[error("{}attribute '{attribute}' expects a {expected:?} value", fmt_line(*.row))]
    KindMismatch {
        row: Option<usize>,
        attribute: String,
        expected: AttributeKind,
    },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    FractionOutOfRange(f64),
    #[error("dataset too small: {0}")]
    TooSmall(String),
    #[error("batch size must be at least 1")]
    BatchSize,
    #[error("no numeric attributes to standardize")]
    NoNumeric,
    #[error("unknown benchmark '{0}' (expected consumer_behavior, health_metrics, real_estate or social_network)")]
    UnknownBenchmark(String),
}

fn fmt_line(row: Option<usize>) -> String {
    row.map(|r| format!("line {r}: ")).unwrap_or_default()
}

impl TabularError {
    /// Attaches a zero-based row position to a per-row validation error.
    pub(crate) fn at_row(self, row: usize) -> Self {
        self.at_line(row + 1)
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            TabularError::Arity { expected, found, .. } => TabularError::Arity {
                row: Some(line),
                expected,
                found,
            },
            TabularError::Numeric { attribute, text, .. } => TabularError::Numeric {
                row: Some(line),
                attribute,
                text,
            },
            TabularError::UnknownCategory { attribute, value, .. } => TabularError::UnknownCategory {
                row: Some(line),
                attribute,
                value,
            },
            TabularError::KindMismatch { attribute, expected, .. } => TabularError::KindMismatch {
                row: Some(line),
                attribute,
                expected,
            },
            other => other,
        }
    }
}
