use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::baselines::{train_baseline, BaselineConfig, ClassifierKind};
use super::metrics::{classification_metrics, Metrics};
use super::EvalError;
use crate::stats;
use crate::tabular::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Original,
    Augmented,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Original => "Original",
            Condition::Augmented => "Augmented",
        }
    }
}

/// Mean and population standard deviation over runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: stats::mean(values),
            std: stats::population_std(values),
        }
    }

    /// Percent form, e.g. `68.63±2.12`.
    pub fn percent(&self) -> String {
        format!("{:.2}±{:.2}", self.mean * 100.0, self.std * 100.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub kind: ClassifierKind,
    pub seed: u64,
    pub metrics: Metrics,
    pub degenerate: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: Condition,
    pub train_rows: usize,
    pub macro_f1_weighted: MetricSummary,
    pub balanced_accuracy: MetricSummary,
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub runs: Vec<RunMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub classes: Vec<String>,
    pub minority: String,
    pub test_rows: usize,
    pub rows: Vec<ConditionRow>,
}

impl MetricTable {
    pub fn row(&self, condition: Condition) -> Option<&ConditionRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// Aligned plain-text table, values in percent.
    pub fn render_text(&self) -> String {
        let header = ["Condition", "Macro-F1", "BAL ACC", "Sensitivity", "Specificity"];
        let mut cells: Vec<[String; 5]> = vec![header.map(String::from)];
        for r in &self.rows {
            cells.push([
                r.condition.name().to_string(),
                r.macro_f1_weighted.percent(),
                r.balanced_accuracy.percent(),
                r.sensitivity.percent(),
                r.specificity.percent(),
            ]);
        }
        let widths: Vec<usize> = (0..5).map(|j| cells.iter().map(|c| c[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (cell, &w))| {
                    let pad = w - cell.chars().count();
                    if j == 0 {
                        format!("{cell}{}", " ".repeat(pad))
                    } else {
                        format!("{}{cell}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        let _ = writeln!(out, "minority class: {}", self.minority);
        if self.classes.len() > 2 {
            let _ = writeln!(out, "specificity: mean recall over non-minority classes");
        }
        out
    }
}

/// Smallest-support class (ties: lowest index).
pub fn default_minority(ds: &Dataset) -> usize {
    let groups = ds.indices_by_class();
    (0..groups.len()).min_by_key(|&c| (groups[c].len(), c)).unwrap_or(0)
}

fn check_schema(a: &Dataset, b: &Dataset, what: &str) -> Result<(), EvalError> {
    if a.schema() != b.schema() {
        return Err(EvalError::SchemaMismatch(format!("{what} schema differs from the real training set")));
    }
    Ok(())
}

/// Trains every (kind, seed) baseline on the real training set, and again on
/// the real set plus `synth`, scoring each on `test`.
pub fn evaluate_augmentation(
    real_train: &Dataset,
    synth: &Dataset,
    test: &Dataset,
    kinds: &[ClassifierKind],
    seeds: &[u64],
    minority: Option<usize>,
    cfg: &BaselineConfig,
) -> Result<MetricTable, EvalError> {
    check_schema(real_train, synth, "synthetic")?;
    check_schema(real_train, test, "test")?;
    if kinds.is_empty() || seeds.is_empty() {
        return Err(EvalError::InvalidConfig("at least one classifier kind and one seed are required".into()));
    }
    let n_classes = real_train.schema().n_classes();
    let minority = minority.unwrap_or_else(|| default_minority(real_train));
    if minority >= n_classes {
        return Err(EvalError::UnknownLabel(minority));
    }
    let mut augmented = real_train.clone();
    augmented.extend_from(synth)?;
    let y_test = test.labels();

    let mut rows = Vec::new();
    for (condition, train) in [(Condition::Original, real_train), (Condition::Augmented, &augmented)] {
        let mut runs = Vec::new();
        for &kind in kinds {
            for &seed in seeds {
                let clf = train_baseline(train, kind, cfg, seed)?;
                let report = classification_metrics(&y_test, &clf.predict(test), n_classes, minority)?;
                runs.push(RunMetrics {
                    kind,
                    seed,
                    metrics: report.metrics,
                    degenerate: report.degenerate,
                });
            }
        }
        let pick = |f: fn(&Metrics) -> f64| MetricSummary::of(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
        rows.push(ConditionRow {
            condition,
            train_rows: train.len(),
            macro_f1_weighted: pick(|m| m.macro_f1_weighted),
            balanced_accuracy: pick(|m| m.balanced_accuracy),
            sensitivity: pick(|m| m.sensitivity),
            specificity: pick(|m| m.specificity),
            runs,
        });
    }
    Ok(MetricTable {
        classes: real_train.schema().classes().to_vec(),
        minority: real_train.schema().classes()[minority].clone(),
        test_rows: test.len(),
        rows,
    })
}
