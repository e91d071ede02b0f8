use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CoresetError;

/// Probe classifier and optimizer settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    /// Hidden layer widths. Every layer but the last is followed by ReLU; the
    /// last is a plain linear projection before the output head.
    pub hidden_widths: Vec<usize>,
    /// Feature-wise soft attention in front of the first hidden layer.
    pub attention: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![64, 32, 16, 8],
            attention: true,
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 100,
            beta1: 0.5,
            beta2: 0.9,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), CoresetError> {
        let bad = |m: &str| Err(CoresetError::InvalidConfig(m.to_string()));
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return bad("hidden widths must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("Adam betas must lie strictly between 0 and 1");
        }
        if self.epochs < 3 {
            return bad("at least 3 epochs are needed for early/mid/late phases");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Dense {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
    relu: bool,
}

/// Attention → hidden stack → softmax head, with all weights in one flat
/// parameter vector so the optimizer and finite-difference checks can treat
/// it uniformly.
#[derive(Clone, Debug)]
pub struct ProbeNetwork {
    input_dim: usize,
    n_classes: usize,
    attention: Option<Dense>,
    layers: Vec<Dense>,
    params: Vec<f64>,
}

struct Cache {
    /// softmax attention weights (empty when attention is off)
    attn: Vec<f64>,
    /// inputs to each dense layer
    inputs: Vec<Vec<f64>>,
    /// pre-activations of each dense layer
    pre: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

impl ProbeNetwork {
    pub fn new(input_dim: usize, n_classes: usize, cfg: &ProbeConfig) -> Self {
        let mut offset = 0;
        let mut alloc = |n_in: usize, n_out: usize, relu: bool| {
            let d = Dense {
                w: offset,
                b: offset + n_in * n_out,
                n_in,
                n_out,
                relu,
            };
            offset += n_in * n_out + n_out;
            d
        };
        let attention = cfg.attention.then(|| alloc(input_dim, input_dim, false));
        let mut layers = Vec::new();
        let mut width = input_dim;
        let n_hidden = cfg.hidden_widths.len();
        for (i, &w) in cfg.hidden_widths.iter().enumerate() {
            layers.push(alloc(width, w, i + 1 < n_hidden));
            width = w;
        }
        layers.push(alloc(width, n_classes, false));

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut params = vec![0.0; offset];
        for d in attention.iter().chain(&layers) {
            // He-uniform for ReLU layers, Glorot-uniform otherwise; zero biases.
            let limit = if d.relu {
                (6.0 / d.n_in as f64).sqrt()
            } else {
                (6.0 / (d.n_in + d.n_out) as f64).sqrt()
            };
            for p in &mut params[d.w..d.b] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Self {
            input_dim,
            n_classes,
            attention,
            layers,
            params,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn affine(&self, d: &Dense, x: &[f64]) -> Vec<f64> {
        let w = &self.params[d.w..d.b];
        let b = &self.params[d.b..d.b + d.n_out];
        (0..d.n_out)
            .map(|o| {
                let row = &w[o * d.n_in..(o + 1) * d.n_in];
                b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()
            })
            .collect()
    }

    fn forward(&self, x: &[f64]) -> Cache {
        let (attn, mut h) = match &self.attention {
            Some(d) => {
                let mut a = self.affine(d, x);
                softmax_in_place(&mut a);
                let h = a.iter().zip(x).map(|(a, x)| a * x).collect();
                (a, h)
            }
            None => (Vec::new(), x.to_vec()),
        };
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        for d in &self.layers {
            let u = self.affine(d, &h);
            let out = if d.relu { u.iter().map(|v| v.max(0.0)).collect() } else { u.clone() };
            inputs.push(std::mem::replace(&mut h, out));
            pre.push(u);
        }
        softmax_in_place(&mut h);
        Cache {
            attn,
            inputs,
            pre,
            probs: h,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).probs
    }

    /// Squared L2 distance between the softmax output and the one-hot target.
    pub fn l2_error(&self, x: &[f64], target: usize) -> f64 {
        squared_error(&self.predict_proba(x), target)
    }

    /// Mean cross-entropy over the given samples.
    pub fn loss(&self, xs: &[&[f64]], ys: &[usize]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| -self.predict_proba(x)[y].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / xs.len() as f64
    }

    /// Mean cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let cache = self.forward(x);
            loss -= cache.probs[y].max(f64::MIN_POSITIVE).ln();
            self.backward(x, y, &cache, scale, &mut grad);
        }
        (loss * scale, grad)
    }

    fn backward(&self, x: &[f64], y: usize, cache: &Cache, scale: f64, grad: &mut [f64]) {
        // d(-ln p_y)/du = p - onehot(y)
        let mut delta: Vec<f64> = cache.probs.clone();
        delta[y] -= 1.0;
        for (li, d) in self.layers.iter().enumerate().rev() {
            if d.relu {
                for (g, u) in delta.iter_mut().zip(&cache.pre[li]) {
                    if *u <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let input = &cache.inputs[li];
            let w = &self.params[d.w..d.b];
            let mut back = vec![0.0; d.n_in];
            for o in 0..d.n_out {
                let g = delta[o] * scale;
                if g != 0.0 {
                    let gw = &mut grad[d.w + o * d.n_in..d.w + (o + 1) * d.n_in];
                    for (gw, xi) in gw.iter_mut().zip(input) {
                        *gw += g * xi;
                    }
                    grad[d.b + o] += g;
                }
                let row = &w[o * d.n_in..(o + 1) * d.n_in];
                for (bk, wi) in back.iter_mut().zip(row) {
                    *bk += delta[o] * wi;
                }
            }
            delta = back;
        }
        if let Some(d) = &self.attention {
            // h = a ⊙ x, a = softmax(z)
            let da: Vec<f64> = delta.iter().zip(x).map(|(g, x)| g * x).collect();
            let dot: f64 = cache.attn.iter().zip(&da).map(|(a, g)| a * g).sum();
            for o in 0..d.n_out {
                let dz = cache.attn[o] * (da[o] - dot) * scale;
                let gw = &mut grad[d.w + o * d.n_in..d.w + (o + 1) * d.n_in];
                for (gw, xi) in gw.iter_mut().zip(x) {
                    *gw += dz * xi;
                }
                grad[d.b + o] += dz;
            }
        }
    }
}

pub(crate) fn squared_error(probs: &[f64], target: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let t = if k == target { 1.0 } else { 0.0 };
            (p - t) * (p - t)
        })
        .sum()
}

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Per-sample, per-epoch squared L2 prediction errors plus the epoch
/// phase boundaries used for the variance score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTrace {
    /// `errors[i][t]`: error of sample `i` measured after epoch `t`.
    pub errors: Vec<Vec<f64>>,
    /// Mean cross-entropy over the training set after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Half-open epoch ranges for the early, mid and late phases.
    pub phases: [(usize, usize); 3],
}

impl ErrorTrace {
    pub fn n_samples(&self) -> usize {
        self.errors.len()
    }

    pub fn n_epochs(&self) -> usize {
        self.epoch_losses.len()
    }
}

/// Equal thirds; leftover epochs go to the late phase.
pub fn phase_bounds(epochs: usize) -> [(usize, usize); 3] {
    let third = epochs / 3;
    [(0, third), (third, 2 * third), (2 * third, epochs)]
}

/// Trains the probe on pre-encoded features and records the per-epoch error
/// of every sample.
///
/// `relabel` runs at the start of each epoch (0-based) and may rewrite the
/// training targets; errors are always measured against the current targets.
pub fn train_probe_with_schedule(
    inputs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    cfg: &ProbeConfig,
    mut relabel: impl FnMut(usize, &mut [usize]),
) -> Result<ErrorTrace, CoresetError> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(CoresetError::EmptyDataset);
    }
    assert_eq!(inputs.len(), labels.len(), "inputs and labels differ in length");
    let input_dim = inputs[0].len();
    let mut net = ProbeNetwork::new(input_dim, n_classes, cfg);
    let mut adam = Adam::new(net.params().len(), cfg.learning_rate, cfg.beta1, cfg.beta2);
    // Separate stream from the weight initialisation.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut targets = labels.to_vec();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut errors = vec![Vec::with_capacity(cfg.epochs); inputs.len()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        relabel(epoch, &mut targets);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| inputs[i].as_slice()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let (_, grad) = net.loss_and_grad(&xs, &ys);
            adam.step(net.params_mut(), &grad);
        }
        let mut loss = 0.0;
        for (i, x) in inputs.iter().enumerate() {
            let p = net.predict_proba(x);
            loss -= p[targets[i]].max(f64::MIN_POSITIVE).ln();
            errors[i].push(squared_error(&p, targets[i]));
        }
        loss /= inputs.len() as f64;
        if !loss.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(CoresetError::NonFinite { epoch: epoch + 1 });
        }
        epoch_losses.push(loss);
    }
    Ok(ErrorTrace {
        errors,
        epoch_losses,
        phases: phase_bounds(cfg.epochs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ys = xs.iter().map(|x| usize::from(x[0] + 0.5 * x[1] > 0.0)).collect();
        (xs, ys)
    }

    #[test]
    fn shape_and_determinism() {
        let (xs, ys) = toy(40, 1);
        let cfg = ProbeConfig {
            epochs: 3,
            ..ProbeConfig::default()
        };
        let a = train_probe_with_schedule(&xs, &ys, 2, &cfg, |_, _| {}).unwrap();
        assert_eq!(a.n_epochs(), 3);
        assert!(a.errors.iter().all(|e| e.len() == 3));
        let b = train_probe_with_schedule(&xs, &ys, 2, &cfg, |_, _| {}).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ProbeConfig {
            epochs: 2,
            ..ProbeConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.epochs = 10;
        cfg.beta1 = 1.0;
        assert!(cfg.validate().is_err());
        cfg.beta1 = 0.5;
        cfg.hidden_widths = vec![4, 0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn huge_learning_rate_is_diagnosed() {
        let (xs, _) = toy(64, 2);
        let xs: Vec<Vec<f64>> = xs.into_iter().map(|x| x.into_iter().map(|v| v * 1e150).collect()).collect();
        let ys: Vec<usize> = (0..64).map(|i| i % 2).collect();
        let cfg = ProbeConfig {
            epochs: 5,
            learning_rate: 1e200,
            ..ProbeConfig::default()
        };
        let err = train_probe_with_schedule(&xs, &ys, 2, &cfg, |_, _| {}).unwrap_err();
        assert!(matches!(err, CoresetError::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn phases_split_into_thirds() {
        assert_eq!(phase_bounds(100), [(0, 33), (33, 66), (66, 100)]);
        assert_eq!(phase_bounds(3), [(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut p = vec![1.0, -1.0];
        let mut adam = Adam::new(2, 0.1, 0.9, 0.999);
        adam.step(&mut p, &[2.0, -3.0]);
        // first bias-corrected step has magnitude lr
        assert!((p[0] - 0.9).abs() < 1e-6 && (p[1] + 0.9).abs() < 1e-6);
    }
}
