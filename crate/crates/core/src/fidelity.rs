//! Dataset-level fidelity: binned KL divergence per numeric attribute and
//! differences between Pearson correlation matrices.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;
use crate::tabular::Dataset;

/// Additive smoothing applied to every bin before renormalising.
pub const KL_EPSILON: f64 = 1e-10;
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum FidelityError {
    #[error("column is empty")]
    EmptyColumn,
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("no numeric attributes to compare")]
    NoNumeric,
    #[error("need at least {0} numeric attributes")]
    TooFewNumeric(usize),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("numeric attributes differ: [{0}] vs [{1}]")]
    AttributeMismatch(String, String),
}

/// Equal-width bins over the real column's standardized range, with the
/// smoothed masses of both columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// k + 1 edges in standardized units.
    pub edges: Vec<f64>,
    pub real: Vec<f64>,
    pub synth: Vec<f64>,
}

pub fn histogram(real: &[f64], synth: &[f64], k: usize) -> Result<Histogram, FidelityError> {
    if k < 2 {
        return Err(FidelityError::TooFewBins(k));
    }
    if real.is_empty() || synth.is_empty() {
        return Err(FidelityError::EmptyColumn);
    }
    let mu = stats::mean(real);
    let sd = stats::population_std(real);
    let z = |x: f64| if sd > 0.0 { (x - mu) / sd } else { x - mu };
    let zr: Vec<f64> = real.iter().map(|&x| z(x)).collect();
    let lo = zr.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = zr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / k as f64;
    let bin = |v: f64| -> usize {
        if width > 0.0 {
            (((v - lo) / width).floor().max(0.0) as usize).min(k - 1)
        } else if v <= lo {
            0
        } else {
            k - 1
        }
    };
    let masses = |values: &mut dyn Iterator<Item = f64>, n: usize| {
        let mut counts = vec![0usize; k];
        for v in values {
            counts[bin(v)] += 1;
        }
        counts
            .iter()
            .map(|&c| (c as f64 / n as f64 + KL_EPSILON) / (1.0 + k as f64 * KL_EPSILON))
            .collect::<Vec<f64>>()
    };
    let p = masses(&mut zr.iter().copied(), real.len());
    let q = masses(&mut synth.iter().map(|&x| z(x)), synth.len());
    let edges = (0..=k).map(|i| lo + width * i as f64).collect();
    Ok(Histogram { edges, real: p, synth: q })
}

/// KL(P‖Q) in nats between the binned real (P) and synthetic (Q) columns.
pub fn kl_divergence_binned(real: &[f64], synth: &[f64], k: usize) -> Result<f64, FidelityError> {
    let h = histogram(real, synth, k)?;
    Ok(kl_from_masses(&h.real, &h.synth))
}

pub fn kl_from_masses(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(p, q)| p * (p / q).ln()).sum::<f64>().max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetKl {
    pub per_attribute: Vec<(String, f64)>,
    pub mean: f64,
    pub bins: usize,
}

fn numeric_names(ds: &Dataset) -> Vec<String> {
    ds.schema()
        .numeric_indices()
        .into_iter()
        .map(|i| ds.schema().attribute(i).name.clone())
        .collect()
}

fn check_same_numeric(real: &Dataset, synth: &Dataset) -> Result<Vec<usize>, FidelityError> {
    let (a, b) = (numeric_names(real), numeric_names(synth));
    if a != b {
        return Err(FidelityError::AttributeMismatch(a.join(","), b.join(",")));
    }
    if a.is_empty() {
        return Err(FidelityError::NoNumeric);
    }
    Ok(real.schema().numeric_indices())
}

/// Unweighted mean of per-attribute KL over the numeric attributes.
pub fn dataset_kl(real: &Dataset, synth: &Dataset, k: usize) -> Result<DatasetKl, FidelityError> {
    let numeric = check_same_numeric(real, synth)?;
    let mut per_attribute = Vec::with_capacity(numeric.len());
    for &j in &numeric {
        let kl = kl_divergence_binned(&real.column(j), &synth.column(j), k)?;
        per_attribute.push((real.schema().attribute(j).name.clone(), kl));
    }
    let mean = per_attribute.iter().map(|(_, v)| v).sum::<f64>() / per_attribute.len() as f64;
    Ok(DatasetKl {
        per_attribute,
        mean,
        bins: k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub attributes: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Zero-variance attributes (their off-diagonal entries are 0).
    pub degenerate: Vec<String>,
}

pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix, FidelityError> {
    if ds.len() < 2 {
        return Err(FidelityError::TooFewRows(ds.len()));
    }
    let numeric = ds.schema().numeric_indices();
    if numeric.len() < 2 {
        return Err(FidelityError::TooFewNumeric(2));
    }
    let cols: Vec<Vec<f64>> = numeric.iter().map(|&j| ds.column(j)).collect();
    let (values, degenerate) = stats::correlation_matrix(&cols);
    let attributes = numeric_names(ds);
    Ok(CorrelationMatrix {
        degenerate: degenerate.iter().map(|&i| attributes[i].clone()).collect(),
        attributes,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDiff {
    pub real: CorrelationMatrix,
    pub synth: CorrelationMatrix,
    pub diff: Vec<Vec<f64>>,
    pub frobenius: f64,
    pub mae: f64,
    /// Equals frobenius / n.
    pub rmse: f64,
    pub max_diff: f64,
}

/// Summary metrics run over all n² entries, diagonal included.
pub fn correlation_diff_from_matrices(real: CorrelationMatrix, synth: CorrelationMatrix) -> Result<CorrelationDiff, FidelityError> {
    if real.attributes != synth.attributes {
        return Err(FidelityError::AttributeMismatch(real.attributes.join(","), synth.attributes.join(",")));
    }
    let n = real.attributes.len();
    let diff: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (real.values[i][j] - synth.values[i][j]).abs()).collect())
        .collect();
    let flat = diff.iter().flatten();
    let sum_sq: f64 = flat.clone().map(|d| d * d).sum();
    let sum_abs: f64 = flat.clone().sum();
    let max_diff = flat.copied().fold(0.0, f64::max);
    let frobenius = sum_sq.sqrt();
    Ok(CorrelationDiff {
        real,
        synth,
        diff,
        frobenius,
        mae: sum_abs / (n * n) as f64,
        rmse: frobenius / n as f64,
        max_diff,
    })
}

pub fn correlation_diff_metrics(real: &Dataset, synth: &Dataset) -> Result<CorrelationDiff, FidelityError> {
    check_same_numeric(real, synth)?;
    correlation_diff_from_matrices(correlation_matrix(real)?, correlation_matrix(synth)?)
}

impl CorrelationDiff {
    /// Difference matrix as CSV with attribute names on both axes.
    pub fn diff_csv(&self) -> String {
        let mut out = String::from("attribute");
        for a in &self.real.attributes {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (a, row) in self.real.attributes.iter().zip(&self.diff) {
            out.push_str(a);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub kl: DatasetKl,
    /// `None` when either side has fewer than 2 rows or 2 numeric attributes.
    pub correlation: Option<CorrelationDiff>,
    pub log_base: String,
    pub epsilon: f64,
}

pub fn fidelity_report(real: &Dataset, synth: &Dataset, k: usize) -> Result<FidelityReport, FidelityError> {
    let kl = dataset_kl(real, synth, k)?;
    let correlation = match correlation_diff_metrics(real, synth) {
        Ok(c) => Some(c),
        Err(FidelityError::TooFewRows(_) | FidelityError::TooFewNumeric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(FidelityReport {
        kl,
        correlation,
        log_base: "e (nats)".into(),
        epsilon: KL_EPSILON,
    })
}

impl FidelityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "KL divergence ({} bins, natural log, epsilon {:e})",
            self.kl.bins, self.epsilon
        );
        let width = self.kl.per_attribute.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(9);
        for (name, v) in &self.kl.per_attribute {
            let _ = writeln!(out, "  {name:<width$}  {v:>8.4}");
        }
        let _ = writeln!(out, "  {:<width$}  {:>8.4}", "mean", self.kl.mean);
        out.push('\n');
        match &self.correlation {
            Some(c) => {
                out.push_str("Correlation difference\n");
                for (label, v) in [
                    ("Frobenius", c.frobenius),
                    ("MAE", c.mae),
                    ("RMSE", c.rmse),
                    ("Max Diff", c.max_diff),
                ] {
                    let _ = writeln!(out, "  {label:<9}  {v:>8.4}");
                }
            }
            None => out.push_str("Correlation difference: unavailable\n"),
        }
        out
    }
}
