//! Projected stochastic supergradient ascent on a separable concave
//! quadratic, used to check the step-size and projection behaviour of the
//! feedback recursion in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::FeedbackError;

/// Step size η_i for iteration i ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    Constant { c: f64 },
    /// η_i = c / i^p
    Power { c: f64, p: f64 },
}

impl StepRule {
    pub fn harmonic(c: f64) -> Self {
        StepRule::Power { c, p: 1.0 }
    }

    /// Accepts only rules whose steps sum to infinity while their squares
    /// stay summable: c / i^p with c > 0 and 1/2 < p <= 1.
    pub fn validate(&self) -> Result<(), FeedbackError> {
        match *self {
            StepRule::Constant { .. } => Err(FeedbackError::InvalidSpec(
                "constant step sizes are not square-summable".into(),
            )),
            StepRule::Power { c, p } => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(FeedbackError::InvalidSpec(format!("step scale must be positive, got {c}")));
                }
                if !(p > 0.5 && p <= 1.0) {
                    return Err(FeedbackError::InvalidSpec(format!(
                        "step exponent must lie in (0.5, 1], got {p}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eta(&self, i: usize) -> f64 {
        match *self {
            StepRule::Constant { c } => c,
            StepRule::Power { c, p } => c / (i as f64).powf(p),
        }
    }
}

/// Utility V(φ) = -curvature · ||φ - target||² over the box [lower, upper].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentSpec {
    pub target: Vec<f64>,
    pub curvature: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: Vec<f64>,
    pub step: StepRule,
    /// Standard deviation of the additive Gaussian gradient noise.
    pub noise: f64,
}

impl AscentSpec {
    /// One-dimensional spec.
    pub fn scalar(target: f64, curvature: f64, bounds: (f64, f64), start: f64, step: StepRule, noise: f64) -> Self {
        Self {
            target: vec![target],
            curvature,
            lower: vec![bounds.0],
            upper: vec![bounds.1],
            start: vec![start],
            step,
            noise,
        }
    }

    pub fn validate(&self) -> Result<(), FeedbackError> {
        self.step.validate()?;
        let d = self.target.len();
        if d == 0 || self.lower.len() != d || self.upper.len() != d || self.start.len() != d {
            return Err(FeedbackError::InvalidSpec("dimension mismatch".into()));
        }
        if !(self.curvature > 0.0) || !self.curvature.is_finite() {
            return Err(FeedbackError::InvalidSpec(format!(
                "curvature must be positive for a concave utility, got {}",
                self.curvature
            )));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(FeedbackError::InvalidSpec(format!("noise must be >= 0, got {}", self.noise)));
        }
        for k in 0..d {
            if !(self.lower[k] <= self.upper[k]) || !self.lower[k].is_finite() || !self.upper[k].is_finite() {
                return Err(FeedbackError::InvalidSpec(format!("bad bounds in dimension {k}")));
            }
        }
        Ok(())
    }

    pub fn utility(&self, phi: &[f64]) -> f64 {
        -self.curvature * phi.iter().zip(&self.target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>()
    }

    fn project(&self, phi: &mut [f64]) {
        for (k, p) in phi.iter_mut().enumerate() {
            *p = p.clamp(self.lower[k], self.upper[k]);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentRun {
    pub spec: AscentSpec,
    pub seed: u64,
    /// φ_0 .. φ_T
    pub trajectory: Vec<Vec<f64>>,
}

impl AscentRun {
    pub fn last(&self) -> &[f64] {
        self.trajectory.last().expect("trajectory holds the start point")
    }
}

/// φ_i = Π(φ_{i-1} + η_i g_i) with g_i the exact gradient plus Gaussian noise.
pub fn simulate_calibration(spec: &AscentSpec, steps: usize, seed: u64) -> Result<AscentRun, FeedbackError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut phi = spec.start.clone();
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(phi.clone());
    for i in 1..=steps {
        let eta = spec.step.eta(i);
        for k in 0..phi.len() {
            let g = -2.0 * spec.curvature * (phi[k] - spec.target[k]) + spec.noise * normal.sample(&mut rng);
            phi[k] += eta * g;
        }
        spec.project(&mut phi);
        trajectory.push(phi.clone());
    }
    Ok(AscentRun {
        spec: spec.clone(),
        seed,
        trajectory,
    })
}
