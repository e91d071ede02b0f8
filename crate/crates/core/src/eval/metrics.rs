use serde::{Deserialize, Serialize};

use super::EvalError;

/// counts[t][p]: samples of true class t predicted as p.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_labels(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Self, EvalError> {
        if y_true.len() != y_pred.len() {
            return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
        }
        let mut counts = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= n_classes || p >= n_classes {
                return Err(EvalError::UnknownLabel(t.max(p)));
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn true_positives(&self, c: usize) -> u64 {
        self.counts[c][c]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub macro_f1_weighted: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metrics: Metrics,
    pub minority: usize,
    /// Classes whose recall or F1 had a zero denominator and was set to 0.
    pub degenerate: Vec<usize>,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact mean of fractions num_i/den_i (den 0 counts as 0), rounded once.
fn mean_of_fractions(fracs: &[(u64, u64)]) -> f64 {
    if fracs.is_empty() {
        return 0.0;
    }
    let (mut num, mut den) = (0u128, 1u128);
    for &(n, d) in fracs {
        if d == 0 {
            continue;
        }
        let (n, d) = (n as u128, d as u128);
        let g = gcd(den, d);
        let lcm = den / g * d;
        num = num * (lcm / den) + n * (lcm / d);
        den = lcm;
        let r = gcd(num, den).max(1);
        num /= r;
        den /= r;
    }
    den *= fracs.len() as u128;
    num as f64 / den as f64
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Support-weighted mean; zero total weight gives 0.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

/// Sensitivity is the minority-class recall. Specificity is the recall of
/// the other class for two classes and the mean recall of all non-minority
/// classes otherwise.
pub fn metrics_from_confusion(cm: &ConfusionMatrix, minority: usize) -> Result<MetricReport, EvalError> {
    let c = cm.n_classes();
    if minority >= c {
        return Err(EvalError::UnknownLabel(minority));
    }
    let mut degenerate = Vec::new();
    let recalls: Vec<(u64, u64)> = (0..c).map(|k| (cm.true_positives(k), cm.support(k))).collect();
    let mut f1 = Vec::with_capacity(c);
    for k in 0..c {
        let tp = cm.true_positives(k);
        let denom = cm.support(k) + cm.predicted(k);
        if cm.support(k) == 0 || denom == 0 {
            degenerate.push(k);
        }
        f1.push(ratio(2 * tp, denom));
    }
    let supports: Vec<f64> = (0..c).map(|k| cm.support(k) as f64).collect();
    let others: Vec<(u64, u64)> = (0..c).filter(|&k| k != minority).map(|k| recalls[k]).collect();
    let metrics = Metrics {
        macro_f1_weighted: weighted_mean(&f1, &supports),
        balanced_accuracy: mean_of_fractions(&recalls),
        sensitivity: ratio(recalls[minority].0, recalls[minority].1),
        specificity: mean_of_fractions(&others),
    };
    Ok(MetricReport {
        metrics,
        minority,
        degenerate,
    })
}

pub fn classification_metrics(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    minority: usize,
) -> Result<MetricReport, EvalError> {
    metrics_from_confusion(&ConfusionMatrix::from_labels(y_true, y_pred, n_classes)?, minority)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(tp: usize, fn_: usize, tn: usize, fp: usize) -> (Vec<usize>, Vec<usize>) {
        // class 1 is the minority/positive class
        let mut t = Vec::new();
        let mut p = Vec::new();
        for (truth, pred, n) in [(1, 1, tp), (1, 0, fn_), (0, 0, tn), (0, 1, fp)] {
            t.extend(std::iter::repeat_n(truth, n));
            p.extend(std::iter::repeat_n(pred, n));
        }
        (t, p)
    }

    #[test]
    fn hand_confusion_example() {
        let (t, p) = binary(8, 2, 90, 10);
        let m = classification_metrics(&t, &p, 2, 1).unwrap().metrics;
        assert_eq!(m.sensitivity, 0.8);
        assert_eq!(m.specificity, 0.9);
        assert_eq!(m.balanced_accuracy, 0.85);
    }

    #[test]
    fn perfect_predictions() {
        let t = vec![0, 1, 2, 2, 1];
        let m = classification_metrics(&t, &t, 3, 0).unwrap().metrics;
        assert_eq!(
            m,
            Metrics {
                macro_f1_weighted: 1.0,
                balanced_accuracy: 1.0,
                sensitivity: 1.0,
                specificity: 1.0
            }
        );
    }

    #[test]
    fn weighted_f1_example() {
        assert!((weighted_mean(&[0.8, 0.9], &[20.0, 80.0]) - 0.88).abs() < 1e-15);
    }

    #[test]
    fn constant_predictor() {
        let t = vec![0, 0, 0, 1];
        let p = vec![0; 4];
        let r = classification_metrics(&t, &p, 2, 1).unwrap();
        // F1 of class 0 = 2·3/(3+4) = 6/7, class 1 contributes 0
        assert!((r.metrics.macro_f1_weighted - 0.75 * 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(r.metrics.sensitivity, 0.0);
    }

    #[test]
    fn zero_support_is_flagged() {
        let r = classification_metrics(&[0, 0], &[0, 1], 3, 2).unwrap();
        assert_eq!(r.degenerate, vec![1, 2]);
        assert!(matches!(classification_metrics(&[0], &[0, 1], 2, 0), Err(EvalError::LengthMismatch(1, 2))));
        assert!(matches!(classification_metrics(&[5], &[0], 2, 0), Err(EvalError::UnknownLabel(5))));
    }

    #[test]
    fn exact_fraction_mean() {
        assert_eq!(mean_of_fractions(&[(1, 3), (2, 3)]), 0.5);
        assert_eq!(mean_of_fractions(&[(8, 10), (90, 100)]), 0.85);
    }
}
