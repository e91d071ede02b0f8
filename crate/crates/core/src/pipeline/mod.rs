//! The synthesis loop: core set, relationship mining, constraint mining, then
//! batch-by-batch generation where each request carries the quality feedback
//! of the batch before it.

mod balance;
mod checkpoint;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coreset::{build_coreset, CoreSet, CoresetError, ProbeConfig};
use crate::feedback::{
    create_feedback, evaluate_batch, BatchQuality, Directive, FeedbackError, FeedbackReport, ReferenceTargets,
    Thresholds,
};
use crate::llm::{
    ChatMessage, Gateway, HttpModel, LanguageModel, LlmError, MockConfig, MockModel, PricePair,
    ReferenceContext, TransportConfig, UsageLedger,
};
use crate::prompt::{
    build_constraint_prompt, build_generation_prompt, build_metadata_prompt, build_relationship_prompt,
    parse_generated_rows, ClassCodeMap, ConstraintSet, PromptError, Reject, RelationshipAnalysis,
};
use crate::tabular::{stratified_batches, BatchPlan, Dataset, StandardizationParams, TabularError};

pub use balance::CarryPool;
pub use checkpoint::{config_hash, read_checkpoint, write_atomic, Checkpoint};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("training set needs rows of at least two classes")]
    TooFewClasses,
    #[error(transparent)]
    Coreset(#[from] CoresetError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("stalled: {batches} consecutive batches produced no balanced rows ({diagnostic})")]
    Stall { batches: usize, diagnostic: String },
    #[error("checkpoint was written for config {found}, current config is {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("corrupt checkpoint {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Where completions come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    Mock(MockConfig),
    Http(TransportConfig),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Mock(MockConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Stop once this many balanced synthetic rows exist.
    pub n_target: usize,
    /// Reference batch size B.
    pub batch_size: usize,
    /// Core set rows per class.
    pub coreset_k: usize,
    /// Rows requested per class and batch; `batch_size / classes` if unset.
    pub per_class: Option<usize>,
    pub thresholds: Thresholds,
    pub probe: ProbeConfig,
    pub backend: Backend,
    pub price: PricePair,
    pub seed: u64,
    /// Replace category values with opaque codes in prompts.
    pub obfuscate: bool,
    /// Keep core set rows out of the reference batches.
    pub exclude_coreset: bool,
    /// Consecutive batches without a single accepted row before giving up.
    pub stall_limit: usize,
    /// Short description of what the records are about; empty means
    /// "tabular records".
    pub domain: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_target: 1000,
            batch_size: 30,
            coreset_k: 100,
            per_class: None,
            thresholds: Thresholds::default(),
            probe: ProbeConfig::default(),
            backend: Backend::default(),
            price: PricePair::default(),
            seed: 0,
            obfuscate: false,
            exclude_coreset: false,
            stall_limit: 5,
            domain: String::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_string()));
        if self.n_target < 1 {
            return bad("n_target must be at least 1");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if self.coreset_k < 1 {
            return bad("coreset_k must be at least 1");
        }
        if self.per_class == Some(0) {
            return bad("per_class must be at least 1");
        }
        if self.stall_limit < 1 {
            return bad("stall_limit must be at least 1");
        }
        self.thresholds
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.probe
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        if let Backend::Http(t) = &self.backend {
            t.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub fn per_class_for(&self, n_classes: usize) -> usize {
        self.per_class.unwrap_or((self.batch_size / n_classes.max(1)).max(1))
    }

    /// The configured backend, with the mock seeded from the run seed.
    pub fn build_model(&self) -> Result<Box<dyn LanguageModel>, PipelineError> {
        Ok(match &self.backend {
            Backend::Mock(m) => Box::new(MockModel::new(MockConfig {
                seed: self.seed,
                ..m.clone()
            })),
            Backend::Http(t) => Box::new(HttpModel::new(t.clone())?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Mining,
    Generating,
    Done,
}

/// Seconds spent waiting on the model, per prompt stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub mining_1: f64,
    pub mining_2: f64,
    pub generation: f64,
    pub total: f64,
}

/// One pass through the generation loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub iteration: usize,
    /// One-based reference batch position.
    pub cursor: usize,
    /// Whether the request carried the previous batch's feedback.
    pub feedback_sent: bool,
    pub parsed: Vec<usize>,
    pub rejects: Vec<Reject>,
    pub accepted: Vec<usize>,
    pub carried: Vec<usize>,
    pub total: usize,
    pub quality: Option<BatchQuality>,
    pub directives: Vec<Directive>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub config_hash: String,
    pub phase: Phase,
    pub codes: ClassCodeMap,
    pub coreset: Option<CoreSet>,
    pub analysis: Option<RelationshipAnalysis>,
    pub constraints: Option<ConstraintSet>,
    pub plan: Option<BatchPlan>,
    pub synthetic: Dataset,
    /// Feedback of the latest batch, sent with the next request.
    pub feedback: Option<FeedbackReport>,
    pub history: Vec<BatchRecord>,
    pub pool: CarryPool,
    pub zero_streak: usize,
    pub timings: PhaseTimings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub synthetic: Dataset,
    pub coreset: CoreSet,
    pub constraints: ConstraintSet,
    pub trajectory: Vec<BatchRecord>,
    pub ledger: UsageLedger,
    pub timings: PhaseTimings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

pub struct Pipeline<'a> {
    train: &'a Dataset,
    cfg: PipelineConfig,
    params: StandardizationParams,
    gateway: &'a mut Gateway,
    state: RunState,
    checkpoint_path: Option<PathBuf>,
}

impl<'a> Pipeline<'a> {
    pub fn new(train: &'a Dataset, cfg: PipelineConfig, gateway: &'a mut Gateway) -> Result<Self, PipelineError> {
        cfg.validate()?;
        if train.indices_by_class().iter().filter(|g| !g.is_empty()).count() < 2 {
            return Err(PipelineError::TooFewClasses);
        }
        let schema = train.schema();
        let codes = if cfg.obfuscate {
            ClassCodeMap::obfuscated(schema, cfg.seed)
        } else {
            ClassCodeMap::plain(schema)
        };
        let state = RunState {
            config_hash: config_hash(&cfg, train),
            phase: Phase::Mining,
            codes,
            coreset: None,
            analysis: None,
            constraints: None,
            plan: None,
            synthetic: Dataset::empty(schema.clone()),
            feedback: None,
            history: Vec::new(),
            pool: CarryPool::new(schema.n_classes()),
            zero_streak: 0,
            timings: PhaseTimings::default(),
        };
        Ok(Self {
            params: StandardizationParams::fit(train)?,
            train,
            cfg,
            gateway,
            state,
            checkpoint_path: None,
        })
    }

    /// Continues from a checkpoint written for the same config and data.
    pub fn resume(
        train: &'a Dataset,
        cfg: PipelineConfig,
        gateway: &'a mut Gateway,
        path: &Path,
    ) -> Result<Self, PipelineError> {
        let mut p = Self::new(train, cfg, gateway)?;
        let ck = read_checkpoint(path)?;
        if ck.state.config_hash != p.state.config_hash {
            return Err(PipelineError::ConfigMismatch {
                expected: p.state.config_hash.clone(),
                found: ck.state.config_hash,
            });
        }
        p.gateway.restore(&ck.gateway)?;
        p.state = ck.state;
        Ok(p)
    }

    /// Writes a checkpoint after every step from now on.
    pub fn with_checkpoints(mut self, path: impl Into<PathBuf>) -> Self {
        self.checkpoint_path = Some(path.into());
        self
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn checkpoint(&self, path: &Path) -> Result<(), PipelineError> {
        let ck = Checkpoint {
            state: self.state.clone(),
            gateway: self.gateway.snapshot(),
        };
        write_atomic(path, ck.to_json().as_bytes())
    }

    /// Runs one unit of work: all of mining, or a single generation batch.
    pub fn step(&mut self) -> Result<Phase, PipelineError> {
        let result = match self.state.phase {
            Phase::Mining => self.mine(),
            Phase::Generating => self.generate_batch(),
            Phase::Done => Ok(()),
        };
        if let Some(path) = &self.checkpoint_path {
            self.checkpoint(path)?;
        }
        result.map(|()| self.state.phase)
    }

    pub fn run(mut self) -> Result<RunReport, PipelineError> {
        while self.step()? != Phase::Done {}
        Ok(self.report())
    }

    fn report(&self) -> RunReport {
        let s = &self.state;
        RunReport {
            config_hash: s.config_hash.clone(),
            synthetic: s.synthetic.clone(),
            coreset: s.coreset.clone().expect("mining finished"),
            constraints: s.constraints.clone().expect("mining finished"),
            trajectory: s.history.clone(),
            ledger: self.gateway.ledger().clone(),
            timings: s.timings,
        }
    }

    fn per_class(&self) -> usize {
        self.cfg.per_class_for(self.train.schema().n_classes())
    }

    fn mine(&mut self) -> Result<(), PipelineError> {
        let train = self.train;
        let schema = train.schema();
        let (core, _) = build_coreset(train, &self.cfg.probe, self.cfg.coreset_k)?;
        let core_rows = core.rows(train);
        let codes = self.state.codes.clone();
        self.gateway.register_reference(ReferenceContext {
            rows: &core_rows,
            codes: &codes,
            per_class: self.per_class(),
        });

        let domain = if self.cfg.domain.trim().is_empty() { "tabular records" } else { &self.cfg.domain };
        let metadata = build_metadata_prompt(schema, domain, &codes)?;
        let prompt = build_relationship_prompt(&core_rows, &metadata, &codes)?;
        let c1 = self.gateway.complete("mining-1", &[ChatMessage::user(prompt)])?;
        let analysis = RelationshipAnalysis::new(c1.text)?;
        let prompt = build_constraint_prompt(&analysis)?;
        let c2 = self.gateway.complete("mining-2", &[ChatMessage::user(prompt)])?;
        let constraints = ConstraintSet::new(c2.text)?;

        let plan = if self.cfg.exclude_coreset {
            let mut used = vec![false; train.len()];
            for i in core.indices() {
                used[i] = true;
            }
            let rest: Vec<usize> = (0..train.len()).filter(|&i| !used[i]).collect();
            let plan = stratified_batches(&train.select(&rest), self.cfg.batch_size)?;
            let groups = plan.groups.iter().map(|g| g.iter().map(|&j| rest[j]).collect()).collect();
            BatchPlan::new(plan.batch_size, groups)
        } else {
            stratified_batches(train, self.cfg.batch_size)?
        };
        if plan.is_empty() {
            return Err(PipelineError::InvalidConfig("no reference batches left after excluding the core set".into()));
        }

        let t = &mut self.state.timings;
        t.mining_1 += c1.latency_secs;
        t.mining_2 += c2.latency_secs;
        t.total += c1.latency_secs + c2.latency_secs;
        self.state.coreset = Some(core);
        self.state.analysis = Some(analysis);
        self.state.constraints = Some(constraints);
        self.state.plan = Some(plan);
        self.state.phase = Phase::Generating;
        log::info!("mining done");
        Ok(())
    }

    fn generate_batch(&mut self) -> Result<(), PipelineError> {
        let per_class = self.per_class();
        let plan = self.state.plan.as_ref().expect("plan built during mining");
        let cursor = plan.cursor();
        let reference = self.train.select(plan.current());
        let codes = self.state.codes.clone();
        self.gateway.register_reference(ReferenceContext {
            rows: &reference,
            codes: &codes,
            per_class,
        });
        let constraints = self.state.constraints.as_ref().expect("constraints mined");
        let previous = self.state.feedback.as_ref();
        let prompt = build_generation_prompt(constraints, &reference, previous, &codes, per_class)?;
        let feedback_sent = previous.is_some_and(|f| !f.is_empty());
        let completion = self.gateway.complete("generation", &[ChatMessage::user(prompt)])?;
        let parsed = parse_generated_rows(&completion.text, self.train.schema(), &codes);

        let (quality, report) = if parsed.accepted.is_empty() {
            (None, None)
        } else {
            let q = evaluate_batch(&parsed.accepted, &reference, &self.params)?;
            let r = create_feedback(&q, &self.cfg.thresholds, &ReferenceTargets::from_batch(&reference));
            (Some(q), Some(r))
        };
        let balanced = self.state.pool.balance(parsed.accepted.rows());
        let mut accepted = vec![0; self.train.schema().n_classes()];
        for row in balanced {
            accepted[row.class] += 1;
            self.state.synthetic.push(row)?;
        }
        let n_accepted: usize = accepted.iter().sum();

        let s = &mut self.state;
        s.timings.generation += completion.latency_secs;
        s.timings.total += completion.latency_secs;
        s.history.push(BatchRecord {
            iteration: s.history.len() + 1,
            cursor,
            feedback_sent,
            parsed: parsed.per_class.clone(),
            rejects: parsed.rejects.clone(),
            accepted,
            carried: s.pool.sizes(),
            total: s.synthetic.len(),
            quality,
            directives: report.as_ref().map(|r| r.directives.clone()).unwrap_or_default(),
        });
        s.feedback = report;
        s.plan.as_mut().expect("plan").advance();
        log::info!(
            "batch {} (reference {cursor}): {n_accepted} rows accepted, {} total",
            s.history.len(),
            s.synthetic.len()
        );

        if s.synthetic.len() >= self.cfg.n_target {
            s.phase = Phase::Done;
            return Ok(());
        }
        if n_accepted == 0 {
            s.zero_streak += 1;
            if s.zero_streak >= self.cfg.stall_limit {
                let diagnostic = parsed
                    .diagnostic
                    .unwrap_or_else(|| format!("rows per class after parsing: {:?}", parsed.per_class));
                return Err(PipelineError::Stall {
                    batches: s.zero_streak,
                    diagnostic,
                });
            }
        } else {
            s.zero_streak = 0;
        }
        Ok(())
    }
}

/// Runs every phase to completion.
pub fn run_pipeline(train: &Dataset, cfg: PipelineConfig, gateway: &mut Gateway) -> Result<RunReport, PipelineError> {
    Pipeline::new(train, cfg, gateway)?.run()
}

/// Builds the configured gateway without a transcript.
pub fn gateway_for(cfg: &PipelineConfig) -> Result<Gateway, PipelineError> {
    Ok(Gateway::new(cfg.build_model()?, cfg.price))
}
