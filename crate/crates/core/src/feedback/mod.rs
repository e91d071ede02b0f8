//! Per-batch quality checks and the threshold-gated feedback built from them.

mod calibration;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;
use crate::tabular::{Dataset, StandardizationParams, TabularError};

pub use calibration::{simulate_calibration, AscentRun, AscentSpec, StepRule};
pub use report::{parse_directives, Directive, FeedbackReport, REPORT_HEADER};

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("synthetic and reference batches have different schemas")]
    SchemaMismatch,
    #[error("{0} batch is empty")]
    EmptyBatch(&'static str),
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid calibration spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// Two-sample KS statistic in [0, 1].
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, FeedbackError> {
    stats::ks_statistic(a, b).ok_or(FeedbackError::EmptySample)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub mean: f64,
    pub std: f64,
    pub corr: f64,
    pub ks: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            mean: 0.10,
            std: 0.15,
            corr: 0.15,
            ks: 0.10,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), FeedbackError> {
        for (name, v) in [("mean", self.mean), ("std", self.std), ("corr", self.corr), ("ks", self.ks)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(FeedbackError::InvalidThresholds(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Standardized-scale comparison of one numeric attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeQuality {
    pub attribute: String,
    pub mean_diff: f64,
    pub std_diff: f64,
    pub ks: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDiff {
    pub a: String,
    pub b: String,
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationQuality {
    pub max_diff: f64,
    /// Pairs with a nonzero difference, largest first.
    pub pairs: Vec<PairDiff>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchQuality {
    pub attributes: Vec<AttributeQuality>,
    /// `None` when either batch has fewer than two rows or the schema has
    /// fewer than two numeric attributes.
    pub correlation: Option<CorrelationQuality>,
}

impl BatchQuality {
    pub fn max_mean_diff(&self) -> f64 {
        self.attributes.iter().map(|a| a.mean_diff).fold(0.0, f64::max)
    }

    pub fn max_std_diff(&self) -> f64 {
        self.attributes.iter().map(|a| a.std_diff).fold(0.0, f64::max)
    }

    pub fn max_ks(&self) -> f64 {
        self.attributes.iter().map(|a| a.ks).fold(0.0, f64::max)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeQuality> {
        self.attributes.iter().find(|a| a.attribute == name)
    }
}

/// Compares a synthetic batch with its reference batch after standardizing
/// both with the training-set parameters.
pub fn evaluate_batch(
    synth: &Dataset,
    reference: &Dataset,
    params: &StandardizationParams,
) -> Result<BatchQuality, FeedbackError> {
    if synth.schema() != reference.schema() {
        return Err(FeedbackError::SchemaMismatch);
    }
    if synth.is_empty() {
        return Err(FeedbackError::EmptyBatch("synthetic"));
    }
    if reference.is_empty() {
        return Err(FeedbackError::EmptyBatch("reference"));
    }
    let schema = synth.schema();
    let numeric = schema.numeric_indices();
    let standardized = |ds: &Dataset, col: usize| -> Result<Vec<f64>, FeedbackError> {
        let name = &schema.attribute(col).name;
        let p = params.get(name).ok_or_else(|| {
            TabularError::SchemaMismatch(format!("no standardization parameters for '{name}'"))
        })?;
        Ok(ds.column(col).into_iter().map(|x| p.apply(x)).collect())
    };

    let mut attributes = Vec::with_capacity(numeric.len());
    let mut syn_cols = Vec::with_capacity(numeric.len());
    let mut ref_cols = Vec::with_capacity(numeric.len());
    for &col in &numeric {
        let s = standardized(synth, col)?;
        let r = standardized(reference, col)?;
        attributes.push(AttributeQuality {
            attribute: schema.attribute(col).name.clone(),
            mean_diff: (stats::mean(&s) - stats::mean(&r)).abs(),
            std_diff: (stats::population_std(&s) - stats::population_std(&r)).abs(),
            ks: ks_statistic(&s, &r)?,
        });
        syn_cols.push(s);
        ref_cols.push(r);
    }

    let correlation = (synth.len() >= 2 && reference.len() >= 2 && numeric.len() >= 2).then(|| {
        let (cs, _) = stats::correlation_matrix(&syn_cols);
        let (cr, _) = stats::correlation_matrix(&ref_cols);
        let mut pairs = Vec::new();
        for i in 0..numeric.len() {
            for j in (i + 1)..numeric.len() {
                let diff = (cs[i][j] - cr[i][j]).abs();
                if diff > 0.0 {
                    pairs.push(PairDiff {
                        a: schema.attribute(numeric[i]).name.clone(),
                        b: schema.attribute(numeric[j]).name.clone(),
                        diff,
                    });
                }
            }
        }
        pairs.sort_by(|x, y| y.diff.total_cmp(&x.diff));
        CorrelationQuality {
            max_diff: pairs.first().map_or(0.0, |p| p.diff),
            pairs,
        }
    });
    Ok(BatchQuality { attributes, correlation })
}

/// Reference-batch means and population stds in original units, the values
/// the feedback asks the generator to move toward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTargets {
    pub means: Vec<(String, f64)>,
    pub stds: Vec<(String, f64)>,
}

impl ReferenceTargets {
    pub fn from_batch(reference: &Dataset) -> Self {
        let schema = reference.schema();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for col in schema.numeric_indices() {
            let name = schema.attribute(col).name.clone();
            let values = reference.column(col);
            means.push((name.clone(), stats::mean(&values)));
            stds.push((name, stats::population_std(&values)));
        }
        Self { means, stds }
    }

    fn lookup(list: &[(String, f64)], name: &str) -> Option<f64> {
        list.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Correlation pairs listed in a single directive.
pub const MAX_CORRELATION_PAIRS: usize = 5;

fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Emits, in order, a mean, variance, correlation and distribution directive
/// for every check whose statistic exceeds its threshold.
pub fn create_feedback(quality: &BatchQuality, thresholds: &Thresholds, targets: &ReferenceTargets) -> FeedbackReport {
    let mut directives = Vec::new();

    let means: Vec<(String, f64)> = quality
        .attributes
        .iter()
        .filter(|a| a.mean_diff > thresholds.mean)
        .filter_map(|a| ReferenceTargets::lookup(&targets.means, &a.attribute).map(|v| (a.attribute.clone(), round4(v))))
        .collect();
    if !means.is_empty() {
        directives.push(Directive::AdjustMeans(means));
    }

    let stds: Vec<(String, f64)> = quality
        .attributes
        .iter()
        .filter(|a| a.std_diff > thresholds.std)
        .filter_map(|a| ReferenceTargets::lookup(&targets.stds, &a.attribute).map(|v| (a.attribute.clone(), round4(v))))
        .collect();
    if !stds.is_empty() {
        directives.push(Directive::MaintainVariance(stds));
    }

    if let Some(corr) = quality.correlation.as_ref().filter(|c| c.max_diff > thresholds.corr) {
        let pairs = corr
            .pairs
            .iter()
            .filter(|p| p.diff > thresholds.corr)
            .take(MAX_CORRELATION_PAIRS)
            .map(|p| (p.a.clone(), p.b.clone()))
            .collect();
        directives.push(Directive::StrengthenCorrelation(pairs));
    }

    let ks: Vec<String> = quality
        .attributes
        .iter()
        .filter(|a| a.ks > thresholds.ks)
        .map(|a| a.attribute.clone())
        .collect();
    if !ks.is_empty() {
        directives.push(Directive::AlignDistribution(ks));
    }

    FeedbackReport {
        quality: quality.clone(),
        directives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AttributeSpec, Schema, Value};

    fn schema() -> Schema {
        Schema::new(
            vec![
                AttributeSpec::numeric("x", ""),
                AttributeSpec::numeric("y", ""),
                AttributeSpec::categorical("c", "", ["a", "b"]),
            ],
            "c",
        )
        .unwrap()
    }

    fn ds(points: &[(f64, f64)]) -> Dataset {
        let rows = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| vec![Value::Num(x), Value::Num(y), Value::Cat(["a", "b"][i % 2].into())])
            .collect();
        Dataset::new(schema(), rows).unwrap()
    }

    fn unit_params() -> StandardizationParams {
        StandardizationParams {
            columns: ["x", "y"]
                .iter()
                .map(|n| crate::tabular::ColumnParams {
                    attribute: n.to_string(),
                    mean: 0.0,
                    std: 1.0,
                })
                .collect(),
        }
    }

    #[test]
    fn identical_batches_score_zero() {
        let d = ds(&[(1.0, 2.0), (2.0, 1.0), (3.0, 5.0)]);
        let q = evaluate_batch(&d, &d, &unit_params()).unwrap();
        assert!(q.attributes.iter().all(|a| a.mean_diff == 0.0 && a.std_diff == 0.0 && a.ks == 0.0));
        let c = q.correlation.unwrap();
        assert_eq!(c.max_diff, 0.0);
        assert!(c.pairs.is_empty());
    }

    #[test]
    fn mean_shift_is_measured_in_standard_units() {
        let r = ds(&[(-1.0, 0.0), (1.0, 1.0)]);
        let s = ds(&[(-0.6, 0.0), (1.4, 1.0)]);
        let q = evaluate_batch(&s, &r, &unit_params()).unwrap();
        assert!((q.attributes[0].mean_diff - 0.4).abs() < 1e-12);
        let mut p = unit_params();
        p.columns[0].std = 2.0;
        let q = evaluate_batch(&s, &r, &p).unwrap();
        assert!((q.attributes[0].mean_diff - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_row_has_no_correlation_section() {
        let d = ds(&[(1.0, 2.0)]);
        assert!(evaluate_batch(&d, &d, &unit_params()).unwrap().correlation.is_none());
        let e = Dataset::empty(schema());
        assert!(matches!(
            evaluate_batch(&e, &d, &unit_params()),
            Err(FeedbackError::EmptyBatch("synthetic"))
        ));
    }

    fn quality(mean: f64, std: f64, corr: f64, ks: f64) -> BatchQuality {
        BatchQuality {
            attributes: vec![AttributeQuality {
                attribute: "x".into(),
                mean_diff: mean,
                std_diff: std,
                ks,
            }],
            correlation: Some(CorrelationQuality {
                max_diff: corr,
                pairs: vec![PairDiff {
                    a: "x".into(),
                    b: "y".into(),
                    diff: corr,
                }],
            }),
        }
    }

    fn targets() -> ReferenceTargets {
        ReferenceTargets {
            means: vec![("x".into(), 35.0)],
            stds: vec![("x".into(), 10.123456)],
        }
    }

    #[test]
    fn directives_follow_thresholds_in_order() {
        let t = Thresholds::default();
        assert!(create_feedback(&quality(0.03, 0.1, 0.1, 0.05), &t, &targets()).is_empty());
        let r = create_feedback(&quality(0.3, 0.3, 0.4, 0.2), &t, &targets());
        assert_eq!(
            r.directives,
            vec![
                Directive::AdjustMeans(vec![("x".into(), 35.0)]),
                Directive::MaintainVariance(vec![("x".into(), 10.1235)]),
                Directive::StrengthenCorrelation(vec![("x".into(), "y".into())]),
                Directive::AlignDistribution(vec!["x".into()]),
            ]
        );
        // mean diff 0.03 stays quiet, std diff 0.30 fires
        let r = create_feedback(&quality(0.03, 0.30, 0.0, 0.0), &t, &targets());
        assert_eq!(r.directives.len(), 1);
        assert!(matches!(r.directives[0], Directive::MaintainVariance(_)));
    }

    #[test]
    fn thresholds_must_be_non_negative() {
        assert!(Thresholds::default().validate().is_ok());
        let t = Thresholds {
            ks: -0.1,
            ..Thresholds::default()
        };
        assert!(t.validate().is_err());
    }
}
