//! Offline stand-in for a chat model. It fits per-class Gaussians to the
//! registered reference rows and answers generation prompts with rows in the
//! same marker/CSV grammar a real model is asked for. A fixed mean drift and
//! std inflation make the first batches measurably off, and the feedback
//! directives in later prompts pull the output back halfway each time.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatMessage, Completion, LanguageModel, LlmError, ReferenceContext, Role, Usage};
use crate::feedback::{parse_directives, Directive};
use crate::prompt::{render_rows, ClassCodeMap};
use crate::stats;
use crate::tabular::{AttributeKind, Dataset, Row, Value};

const GENERATION_CUE: &str = "class generation is balanced";
const CONSTRAINT_CUE: &str = "rules and constraints for data generation are established";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    /// Set from the run seed by the pipeline, so not part of config files.
    #[serde(skip)]
    pub seed: u64,
    /// Offset added to every numeric mean, in units of the reference std.
    pub mean_drift: f64,
    /// Factor applied to every within-class std.
    pub std_inflation: f64,
    /// Initial weight of the fitted correlations (0 = independent columns).
    pub corr_strength: f64,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mean_drift: 0.3,
            std_inflation: 1.25,
            corr_strength: 0.6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Emitted {
    pub mean: f64,
    pub std: f64,
    /// Reference std the mean shift was expressed in at emission time.
    pub unit: f64,
}

/// Everything that changes between calls.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MockState {
    pub calls: u64,
    /// Mean correction per attribute, in reference-std units.
    pub mean_shift: BTreeMap<String, f64>,
    pub std_scale: BTreeMap<String, f64>,
    pub corr_strength: Option<f64>,
    pub last_emitted: BTreeMap<String, Emitted>,
    /// Std of each attribute in the first generation reference, the fixed
    /// unit of `mean_shift` and of the drift from then on.
    #[serde(default)]
    pub units: BTreeMap<String, f64>,
}

struct Registered {
    rows: Dataset,
    codes: ClassCodeMap,
    per_class: usize,
}

pub struct MockModel {
    cfg: MockConfig,
    state: MockState,
    registered: Option<Registered>,
}

impl MockModel {
    pub fn new(cfg: MockConfig) -> Self {
        Self {
            cfg,
            state: MockState::default(),
            registered: None,
        }
    }

    pub fn state(&self) -> &MockState {
        &self.state
    }

    fn rng_for(&self, prompt: &str) -> ChaCha8Rng {
        let digest = Sha256::digest(prompt.as_bytes());
        let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ h ^ self.state.calls.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn unit_of(std: f64) -> f64 {
    if std > 0.0 {
        std
    } else {
        1.0
    }
}

fn decimals(col: &[f64]) -> usize {
    col.iter()
        .map(|x| {
            let s = x.to_string();
            if s.contains(['e', 'E']) {
                4
            } else {
                s.split_once('.').map_or(0, |(_, f)| f.len())
            }
        })
        .max()
        .unwrap_or(0)
        .min(4)
}

fn round_to(x: f64, d: usize) -> f64 {
    let f = 10f64.powi(d as i32);
    let r = (x * f).round() / f;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Lower-triangular L with L·Lᵀ = a, or `None` if `a` is not positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 1e-12) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Centres columns and rescales them to population std 1 (zero columns stay 0).
fn standardize_columns(z: &mut [Vec<f64>]) {
    if z.is_empty() {
        return;
    }
    for k in 0..z[0].len() {
        let col: Vec<f64> = z.iter().map(|r| r[k]).collect();
        let m = stats::mean(&col);
        let s = stats::population_std(&col);
        for r in z.iter_mut() {
            r[k] = if s > 0.0 { (r[k] - m) / s } else { 0.0 };
        }
    }
}

/// `n` draws whose sample means are 0, sample stds 1 and (when n exceeds the
/// dimension) sample correlation matrix exactly `corr`.
fn exact_normal_sample(n: usize, corr: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = corr.len();
    let mut z: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    if n < 2 || d == 0 {
        return vec![vec![0.0; d]; n];
    }
    standardize_columns(&mut z);
    if n > d {
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| z.iter().map(|r| r[i] * r[j]).sum::<f64>() / n as f64).collect())
            .collect();
        if let Some(ls) = cholesky(&cov) {
            for r in z.iter_mut() {
                // forward substitution: r <- Ls^{-1} r
                for i in 0..d {
                    let s: f64 = (0..i).map(|k| ls[i][k] * r[k]).sum();
                    r[i] = (r[i] - s) / ls[i][i];
                }
            }
        }
    }
    let l = cholesky(corr).unwrap_or_else(|| (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect());
    let mut x: Vec<Vec<f64>> = z
        .iter()
        .map(|w| (0..d).map(|i| (0..=i).map(|k| l[i][k] * w[k]).sum()).collect())
        .collect();
    standardize_columns(&mut x);
    x
}

fn pick(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

impl MockModel {
    fn apply_directives(&mut self, directives: &[Directive], reg: &Registered) {
        let schema = reg.rows.schema();
        let stats_of = |name: &str| {
            schema.index_of(name).filter(|&i| schema.attribute(i).is_numeric()).map(|i| {
                let col = reg.rows.column(i);
                (stats::mean(&col), stats::population_std(&col))
            })
        };
        for d in directives {
            match d {
                Directive::AdjustMeans(targets) => {
                    for (name, target) in targets {
                        let Some((ref_mean, ref_std)) = stats_of(name) else { continue };
                        let shift = self.state.mean_shift.get(name).copied().unwrap_or(0.0);
                        let (last, unit) = match self.state.last_emitted.get(name) {
                            Some(e) => (e.mean, e.unit),
                            None => {
                                let u = self.state.units.get(name).copied().unwrap_or_else(|| unit_of(ref_std));
                                (ref_mean + (self.cfg.mean_drift + shift) * u, u)
                            }
                        };
                        self.state.mean_shift.insert(name.clone(), shift + (target - last) / (2.0 * unit));
                    }
                }
                Directive::MaintainVariance(targets) => {
                    for (name, target) in targets {
                        let Some((_, ref_std)) = stats_of(name) else { continue };
                        let scale = self.state.std_scale.get(name).copied().unwrap_or(1.0);
                        let last = match self.state.last_emitted.get(name) {
                            Some(e) => e.std,
                            None => ref_std * self.cfg.std_inflation * scale,
                        };
                        if last > 0.0 && *target >= 0.0 {
                            let next = (scale * (1.0 + (target / last - 1.0) / 2.0)).clamp(0.01, 100.0);
                            self.state.std_scale.insert(name.clone(), next);
                        }
                    }
                }
                Directive::StrengthenCorrelation(_) => {
                    let s = self.state.corr_strength.unwrap_or(self.cfg.corr_strength);
                    self.state.corr_strength = Some(s + (1.0 - s) / 2.0);
                }
                Directive::AlignDistribution(_) => {}
            }
        }
    }

    fn generate(&mut self, prompt: &str, rng: &mut ChaCha8Rng) -> Result<String, LlmError> {
        let reg = self.registered.take().ok_or(LlmError::NoReference)?;
        self.apply_directives(&parse_directives(prompt), &reg);
        let out = self.sample(&reg, rng);
        self.registered = Some(reg);
        out
    }

    fn sample(&mut self, reg: &Registered, rng: &mut ChaCha8Rng) -> Result<String, LlmError> {
        let ds = &reg.rows;
        let schema = ds.schema();
        let numeric = schema.numeric_indices();
        let label = schema.label_index();
        let places: Vec<usize> = numeric.iter().map(|&j| decimals(&ds.column(j))).collect();
        let units: Vec<f64> = numeric
            .iter()
            .map(|&j| {
                let pooled = unit_of(stats::population_std(&ds.column(j)));
                *self.state.units.entry(schema.attribute(j).name.clone()).or_insert(pooled)
            })
            .collect();
        let strength = self.state.corr_strength.unwrap_or(self.cfg.corr_strength).clamp(0.0, 1.0);
        let all: Vec<usize> = (0..ds.len()).collect();

        let mut rows = Vec::new();
        for (c, class_rows) in ds.indices_by_class().iter().enumerate() {
            let members = if class_rows.is_empty() { &all } else { class_rows };
            let sub = ds.select(members);
            let cols: Vec<Vec<f64>> = numeric.iter().map(|&j| sub.column(j)).collect();
            let (corr, _) = stats::correlation_matrix(&cols);
            let target_corr: Vec<Vec<f64>> = corr
                .iter()
                .enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(k, v)| if i == k { 1.0 } else { strength * v }).collect())
                .collect();
            let x = exact_normal_sample(reg.per_class, &target_corr, rng);

            for xr in &x {
                let mut values = Vec::with_capacity(schema.len());
                for (j, attr) in schema.attributes().iter().enumerate() {
                    let v = match attr.kind {
                        AttributeKind::Numeric => {
                            let k = numeric.iter().position(|&n| n == j).expect("numeric index");
                            let name = &attr.name;
                            let shift = self.state.mean_shift.get(name).copied().unwrap_or(0.0);
                            let scale = self.state.std_scale.get(name).copied().unwrap_or(1.0);
                            let m = stats::mean(&cols[k]) + (self.cfg.mean_drift + shift) * units[k];
                            let s = stats::population_std(&cols[k]) * self.cfg.std_inflation * scale;
                            Value::Num(round_to(m + s * xr[k], places[k]))
                        }
                        AttributeKind::Categorical if j == label => Value::Cat(schema.classes()[c].clone()),
                        AttributeKind::Categorical => {
                            let weights: Vec<f64> = attr
                                .categories
                                .iter()
                                .map(|cat| sub.rows().iter().filter(|r| r.values[j].as_cat() == Some(cat)).count() as f64)
                                .collect();
                            Value::Cat(attr.categories[pick(&weights, rng)].clone())
                        }
                    };
                    values.push(v);
                }
                rows.push(Row { values, class: c });
            }
        }
        let out = Dataset::from_rows(schema.clone(), rows).map_err(|e| LlmError::State(e.to_string()))?;
        for (k, &j) in numeric.iter().enumerate() {
            let col = out.column(j);
            self.state.last_emitted.insert(
                schema.attribute(j).name.clone(),
                Emitted {
                    mean: stats::mean(&col),
                    std: stats::population_std(&col),
                    unit: units[k],
                },
            );
        }
        Ok(render_rows(&out, &reg.codes))
    }

    fn class_summaries(&self) -> Result<(Vec<String>, Vec<String>), LlmError> {
        let reg = self.registered.as_ref().ok_or(LlmError::NoReference)?;
        let ds = &reg.rows;
        let schema = ds.schema();
        let groups = ds.indices_by_class();
        let numeric = schema.numeric_indices();
        let mut analysis = Vec::new();
        let mut rules = Vec::new();
        for &j in &numeric {
            let name = &schema.attribute(j).name;
            let mut parts = Vec::new();
            for (c, idx) in groups.iter().enumerate() {
                if idx.is_empty() {
                    continue;
                }
                let col = ds.select(idx).column(j);
                let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
                let m = stats::mean(&col);
                parts.push(format!("class {} averages {m:.2}", reg.codes.marker(c)));
                rules.push(format!(
                    "For class {}, {name} lies between {lo:.2} and {hi:.2} with mean {m:.2}.",
                    reg.codes.marker(c)
                ));
            }
            analysis.push(format!("{name}: {}.", parts.join(", ")));
        }
        let cols: Vec<Vec<f64>> = numeric.iter().map(|&j| ds.column(j)).collect();
        let (corr, _) = stats::correlation_matrix(&cols);
        let mut pairs = Vec::new();
        for a in 0..numeric.len() {
            for b in (a + 1)..numeric.len() {
                if corr[a][b].abs() >= 0.5 {
                    pairs.push((corr[a][b], a, b));
                }
            }
        }
        pairs.sort_by(|x, y| y.0.abs().total_cmp(&x.0.abs()));
        for (r, a, b) in pairs {
            let (na, nb) = (&schema.attribute(numeric[a]).name, &schema.attribute(numeric[b]).name);
            let dir = if r > 0.0 { "rises" } else { "falls" };
            analysis.push(format!("{nb} {dir} with {na} (r = {r:.2})."));
            rules.push(format!("Keep {na} and {nb} correlated at about {r:.2}."));
        }
        for (j, attr) in schema.attributes().iter().enumerate() {
            if attr.is_numeric() || j == schema.label_index() {
                continue;
            }
            for (c, idx) in groups.iter().enumerate() {
                let counts: Vec<usize> = attr
                    .categories
                    .iter()
                    .map(|cat| idx.iter().filter(|&&i| ds.rows()[i].values[j].as_cat() == Some(cat)).count())
                    .collect();
                if let Some((best, _)) = counts.iter().enumerate().filter(|(_, n)| **n > 0).max_by_key(|(i, n)| (**n, usize::MAX - i)) {
                    let shown = reg.codes.encode(schema, j, &attr.categories[best]);
                    rules.push(format!("For class {}, {} is most often {shown}.", reg.codes.marker(c), attr.name));
                }
            }
        }
        Ok((analysis, rules))
    }

    fn analysis(&self) -> Result<String, LlmError> {
        let (lines, _) = self.class_summaries()?;
        let mut out = String::from("Observed relationships in the sample:\n");
        for (i, l) in lines.iter().enumerate() {
            let _ = writeln!(out, "{}. {l}", i + 1);
        }
        Ok(out.trim_end().to_string())
    }

    fn constraints(&self) -> Result<String, LlmError> {
        let (_, rules) = self.class_summaries()?;
        Ok(rules
            .iter()
            .enumerate()
            .map(|(i, r)| format!("Rule {}: {r}", i + 1))
            .collect::<Vec<_>>()
            .join("\n"))
    }
}

impl LanguageModel for MockModel {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        let prompt = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("");
        let mut rng = self.rng_for(prompt);
        let text = if prompt.contains(GENERATION_CUE) {
            self.generate(prompt, &mut rng)?
        } else if prompt.contains(CONSTRAINT_CUE) {
            self.constraints()?
        } else {
            self.analysis()?
        };
        self.state.calls += 1;
        Ok(Completion {
            usage: Usage::estimate(messages, &text),
            text,
            latency_secs: 0.0,
        })
    }

    fn register_reference(&mut self, ctx: ReferenceContext<'_>) {
        self.registered = Some(Registered {
            rows: ctx.rows.clone(),
            codes: ctx.codes.clone(),
            per_class: ctx.per_class,
        });
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("serializable")
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<(), LlmError> {
        self.state = serde_json::from_value(state.clone()).map_err(|e| LlmError::State(e.to_string()))?;
        Ok(())
    }

    fn describe(&self) -> String {
        format!("mock:seed={}", self.cfg.seed)
    }
}
