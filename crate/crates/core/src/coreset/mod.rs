//! Class-balanced core set selection from training dynamics.
//!
//! A small probe network is trained on the (encoded) training set and the
//! squared L2 error of every sample is recorded after each epoch. Samples
//! whose error fluctuates most within the early, mid and late phases of
//! training are the hardest or most ambiguous ones; the top K per class form
//! the core set shown to the language model.

mod probe;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::FeatureEncoder;
use crate::stats;
use crate::tabular::{write_csv, Dataset, TabularError};

pub use probe::{phase_bounds, train_probe_with_schedule, Adam, ErrorTrace, ProbeConfig, ProbeNetwork};

#[derive(Debug, Error)]
pub enum CoresetError {
    #[error("invalid probe config: {0}")]
    InvalidConfig(String),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("class '{0}' has no rows")]
    EmptyClass(String),
    #[error("non-finite loss at epoch {epoch}; the learning rate is probably too high")]
    NonFinite { epoch: usize },
    #[error("phase {0} of the error trace is empty")]
    EmptyPhase(usize),
    #[error("{0} variance scores for {1} rows")]
    ScoreLength(usize, usize),
    #[error("K must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Encodes `ds` (z-scored numerics, one-hot categoricals) and trains the probe.
pub fn train_probe(ds: &Dataset, cfg: &ProbeConfig) -> Result<ErrorTrace, CoresetError> {
    if ds.is_empty() {
        return Err(CoresetError::EmptyDataset);
    }
    if let Some(c) = ds.indices_by_class().iter().position(Vec::is_empty) {
        return Err(CoresetError::EmptyClass(ds.schema().classes()[c].clone()));
    }
    let encoder = FeatureEncoder::fit(ds)?;
    let inputs = encoder.encode(ds)?;
    train_probe_with_schedule(&inputs, &ds.labels(), ds.schema().n_classes(), cfg, |_, _| {})
}

/// Per-sample sum over phases of the within-phase population variance of
/// that sample's errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceScore {
    pub values: Vec<f64>,
}

pub fn per_sample_variance(trace: &ErrorTrace) -> Result<VarianceScore, CoresetError> {
    for (k, &(start, end)) in trace.phases.iter().enumerate() {
        if end <= start {
            return Err(CoresetError::EmptyPhase(k));
        }
    }
    let values = trace
        .errors
        .iter()
        .map(|e| {
            trace
                .phases
                .iter()
                .map(|&(start, end)| stats::population_variance(&e[start..end]))
                .sum()
        })
        .collect();
    Ok(VarianceScore { values })
}

/// The selected row indices of each class, exactly `k` per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreSet {
    pub k: usize,
    pub classes: Vec<String>,
    pub per_class: Vec<Vec<usize>>,
    /// Variance score of each selected index, parallel to `per_class`.
    pub scores: Vec<Vec<f64>>,
}

impl CoreSet {
    /// All selected indices, class by class.
    pub fn indices(&self) -> Vec<usize> {
        self.per_class.concat()
    }

    pub fn rows(&self, ds: &Dataset) -> Dataset {
        ds.select(&self.indices())
    }

    /// Writes the selected rows as CSV and a JSON sidecar with the indices,
    /// scores and the probe configuration that produced them.
    pub fn export(&self, ds: &Dataset, cfg: &ProbeConfig, csv_path: &Path, json_path: &Path) -> Result<(), CoresetError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CoresetError::Io { path, source }
        };
        let file = std::fs::File::create(csv_path).map_err(io(csv_path))?;
        write_csv(&self.rows(ds), file)?;
        let sidecar = serde_json::json!({ "coreset": self, "probe": cfg });
        let text = serde_json::to_string_pretty(&sidecar).expect("serializable");
        std::fs::write(json_path, text + "\n").map_err(io(json_path))?;
        Ok(())
    }
}

/// Top-`k` rows of each class by variance score (ties: lower row index
/// first). A class with fewer than `k` rows repeats its rows cyclically in
/// that same order until it has `k` entries.
pub fn select_coreset(ds: &Dataset, scores: &VarianceScore, k: usize) -> Result<CoreSet, CoresetError> {
    if k == 0 {
        return Err(CoresetError::ZeroK);
    }
    if scores.values.len() != ds.len() {
        return Err(CoresetError::ScoreLength(scores.values.len(), ds.len()));
    }
    let mut per_class = Vec::new();
    let mut picked_scores = Vec::new();
    for (c, mut rows) in ds.indices_by_class().into_iter().enumerate() {
        if rows.is_empty() {
            return Err(CoresetError::EmptyClass(ds.schema().classes()[c].clone()));
        }
        rows.sort_by(|&a, &b| scores.values[b].total_cmp(&scores.values[a]).then(a.cmp(&b)));
        let chosen: Vec<usize> = rows.iter().copied().cycle().take(k).collect();
        picked_scores.push(chosen.iter().map(|&i| scores.values[i]).collect());
        per_class.push(chosen);
    }
    Ok(CoreSet {
        k,
        classes: ds.schema().classes().to_vec(),
        per_class,
        scores: picked_scores,
    })
}

/// Probe training, variance scoring and selection in one call.
pub fn build_coreset(ds: &Dataset, cfg: &ProbeConfig, k: usize) -> Result<(CoreSet, VarianceScore), CoresetError> {
    let trace = train_probe(ds, cfg)?;
    let scores = per_sample_variance(&trace)?;
    Ok((select_coreset(ds, &scores, k)?, scores))
}
