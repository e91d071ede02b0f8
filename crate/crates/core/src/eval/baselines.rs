use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::encode::FeatureEncoder;
use crate::tabular::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Logistic,
    Knn,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Knn => "knn",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic" => Ok(ClassifierKind::Logistic),
            "knn" => Ok(ClassifierKind::Knn),
            other => Err(EvalError::UnknownClassifier(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub logistic_epochs: usize,
    pub logistic_learning_rate: f64,
    pub logistic_l2: f64,
    pub knn_k: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            logistic_epochs: 300,
            logistic_learning_rate: 0.5,
            logistic_l2: 1e-4,
            knn_k: 5,
        }
    }
}

#[derive(Clone, Debug)]
enum Model {
    /// Per class: bias followed by one weight per encoded feature.
    Logistic(Vec<Vec<f64>>),
    Knn { points: Vec<Vec<f64>>, labels: Vec<usize>, k: usize },
}

#[derive(Clone, Debug)]
pub struct Classifier {
    encoder: FeatureEncoder,
    n_classes: usize,
    model: Model,
}

fn softmax_scores(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = w
        .iter()
        .map(|wc| wc[0] + wc[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Fits a baseline on `train`. Logistic regression is softmax regression by
/// full-batch gradient descent with inverse class-frequency sample weights;
/// kNN stores the encoded training points.
pub fn train_baseline(train: &Dataset, kind: ClassifierKind, cfg: &BaselineConfig, seed: u64) -> Result<Classifier, EvalError> {
    let n_classes = train.schema().n_classes();
    let labels = train.labels();
    let present = train.indices_by_class().iter().filter(|g| !g.is_empty()).count();
    if present < 2 {
        return Err(EvalError::SingleClass);
    }
    let encoder = FeatureEncoder::fit(train)?;
    let xs = encoder.encode(train)?;
    let model = match kind {
        ClassifierKind::Logistic => Model::Logistic(fit_logistic(&xs, &labels, n_classes, encoder.width(), cfg, seed)),
        ClassifierKind::Knn => {
            if cfg.knn_k == 0 || cfg.knn_k >= xs.len() {
                return Err(EvalError::InvalidConfig(format!(
                    "knn k must be in [1, {}), got {}",
                    xs.len(),
                    cfg.knn_k
                )));
            }
            Model::Knn {
                points: xs,
                labels,
                k: cfg.knn_k,
            }
        }
    };
    Ok(Classifier {
        encoder,
        n_classes,
        model,
    })
}

fn fit_logistic(xs: &[Vec<f64>], ys: &[usize], c: usize, d: usize, cfg: &BaselineConfig, seed: u64) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut counts = vec![0usize; c];
    for &y in ys {
        counts[y] += 1;
    }
    let present = counts.iter().filter(|&&k| k > 0).count() as f64;
    let class_weight: Vec<f64> = counts
        .iter()
        .map(|&k| if k > 0 { n as f64 / (present * k as f64) } else { 0.0 })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..=d).map(|_| rng.random_range(-0.01..0.01)).collect())
        .collect();
    let total_weight: f64 = ys.iter().map(|&y| class_weight[y]).sum();
    for _ in 0..cfg.logistic_epochs {
        let mut grad = vec![vec![0.0; d + 1]; c];
        for (x, &y) in xs.iter().zip(ys) {
            let p = softmax_scores(&w, x);
            let sw = class_weight[y];
            for k in 0..c {
                let g = sw * (p[k] - f64::from(u8::from(k == y)));
                grad[k][0] += g;
                for (gj, xj) in grad[k][1..].iter_mut().zip(x) {
                    *gj += g * xj;
                }
            }
        }
        for k in 0..c {
            for j in 0..=d {
                let reg = if j == 0 { 0.0 } else { cfg.logistic_l2 * w[k][j] };
                w[k][j] -= cfg.logistic_learning_rate * (grad[k][j] / total_weight + reg);
            }
        }
    }
    w
}

impl Classifier {
    pub fn predict(&self, ds: &Dataset) -> Vec<usize> {
        ds.rows()
            .iter()
            .map(|r| {
                let x = self.encoder.encode_row(r);
                match &self.model {
                    Model::Logistic(w) => argmax(&softmax_scores(w, &x)),
                    Model::Knn { points, labels, k } => self.knn_vote(points, labels, *k, &x),
                }
            })
            .collect()
    }

    /// Majority vote of the k nearest points (distance ties: lower index);
    /// vote ties go to the class whose nearest member ranks first.
    fn knn_vote(&self, points: &[Vec<f64>], labels: &[usize], k: usize, x: &[f64]) -> usize {
        let mut dist: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; self.n_classes];
        let mut first_rank = vec![usize::MAX; self.n_classes];
        for (rank, &(_, i)) in dist.iter().take(k).enumerate() {
            let c = labels[i];
            votes[c] += 1;
            first_rank[c] = first_rank[c].min(rank);
        }
        (0..self.n_classes)
            .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(first_rank[b].cmp(&first_rank[a])))
            .expect("at least one class")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AttributeSpec, Schema, Value};

    fn toy(n: usize, seed: u64) -> Dataset {
        let schema = Schema::new(
            vec![
                AttributeSpec::numeric("a", ""),
                AttributeSpec::numeric("b", ""),
                AttributeSpec::categorical("y", "", ["neg", "pos"]),
            ],
            "y",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|i| {
                let c = usize::from(i % 4 == 0);
                let centre = if c == 1 { 2.0 } else { -2.0 };
                vec![
                    Value::Num(centre + rng.random_range(-1.0..1.0)),
                    Value::Num(rng.random_range(-1.0..1.0)),
                    Value::Cat(["neg", "pos"][c].into()),
                ]
            })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
        pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
    }

    #[test]
    fn logistic_separates_toy_set() {
        let ds = toy(200, 1);
        let clf = train_baseline(&ds, ClassifierKind::Logistic, &BaselineConfig::default(), 3).unwrap();
        assert!(accuracy(&clf.predict(&ds), &ds.labels()) > 0.95);
    }

    #[test]
    fn one_nn_recovers_training_labels() {
        let ds = toy(80, 2);
        let cfg = BaselineConfig {
            knn_k: 1,
            ..BaselineConfig::default()
        };
        let clf = train_baseline(&ds, ClassifierKind::Knn, &cfg, 0).unwrap();
        assert_eq!(accuracy(&clf.predict(&ds), &ds.labels()), 1.0);
    }

    #[test]
    fn deterministic_and_guards() {
        let ds = toy(60, 4);
        let cfg = BaselineConfig::default();
        let a = train_baseline(&ds, ClassifierKind::Logistic, &cfg, 7).unwrap().predict(&ds);
        let b = train_baseline(&ds, ClassifierKind::Logistic, &cfg, 7).unwrap().predict(&ds);
        assert_eq!(a, b);
        let single = ds.select(&ds.indices_by_class()[0]);
        assert!(matches!(
            train_baseline(&single, ClassifierKind::Logistic, &cfg, 0),
            Err(EvalError::SingleClass)
        ));
        let big_k = BaselineConfig { knn_k: 60, ..cfg };
        assert!(train_baseline(&ds, ClassifierKind::Knn, &big_k, 0).is_err());
    }
}
