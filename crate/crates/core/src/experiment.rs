//! Whole-run orchestration over a configuration: data loading, splitting,
//! synthesis, fidelity and classification, with every artifact written to
//! one output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coreset::{build_coreset, CoreSet, CoresetError};
use crate::eval::{evaluate_augmentation, BaselineConfig, ClassifierKind, EvalError, MetricTable};
use crate::fidelity::{fidelity_report, FidelityError, FidelityReport, DEFAULT_BINS};
use crate::llm::{Gateway, LlmError, ReplayModel, TranscriptWriter};
use crate::pipeline::{write_atomic, Backend, Pipeline, PipelineConfig, PipelineError, RunReport, RunState};
use crate::prompt::TEMPLATE_VERSION;
use crate::tabular::{
    benchmark_schema, generate_benchmark, load_csv, to_csv_string, train_test_split, Benchmark, Dataset, Schema,
    TabularError,
};

/// Broad error classes, each mapped to its own process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorFamily {
    Config,
    Data,
    Transport,
    Stall,
    Internal,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Coreset(#[from] CoresetError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn llm_family(e: &LlmError) -> ErrorFamily {
    match e {
        LlmError::InvalidConfig(_) => ErrorFamily::Config,
        LlmError::Replay(_) | LlmError::EmptyMessage(_) | LlmError::NoReference | LlmError::State(_) => ErrorFamily::Data,
        LlmError::Io { .. } => ErrorFamily::Internal,
        _ => ErrorFamily::Transport,
    }
}

impl ExperimentError {
    pub fn family(&self) -> ErrorFamily {
        match self {
            ExperimentError::Config(_) => ErrorFamily::Config,
            ExperimentError::Tabular(_) | ExperimentError::Coreset(_) | ExperimentError::Fidelity(_) | ExperimentError::Eval(_) => ErrorFamily::Data,
            ExperimentError::Llm(e) => llm_family(e),
            ExperimentError::Io { .. } => ErrorFamily::Internal,
            ExperimentError::Pipeline(p) => match p {
                PipelineError::InvalidConfig(_) | PipelineError::ConfigMismatch { .. } => ErrorFamily::Config,
                PipelineError::Stall { .. } => ErrorFamily::Stall,
                PipelineError::Llm(e) => llm_family(e),
                PipelineError::Io { .. } => ErrorFamily::Internal,
                _ => ErrorFamily::Data,
            },
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Exactly one of `benchmark` or `csv` (with `schema`) must be set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub benchmark: Option<String>,
    /// Rows generated for a benchmark.
    pub n: usize,
    pub seed: u64,
    pub csv: Option<PathBuf>,
    pub schema: Option<Schema>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            benchmark: None,
            n: 1000,
            seed: 0,
            csv: None,
            schema: None,
        }
    }
}

impl DataConfig {
    pub fn benchmark(&self) -> Result<Option<Benchmark>, ExperimentError> {
        self.benchmark
            .as_deref()
            .map(|name| name.parse::<Benchmark>().map_err(|e| ExperimentError::Config(format!("data.benchmark: {e}"))))
            .transpose()
    }

    pub fn resolve_schema(&self) -> Result<Schema, ExperimentError> {
        match (self.benchmark()?, &self.schema) {
            (Some(b), None) => Ok(benchmark_schema(b)),
            (None, Some(s)) => Ok(s.clone()),
            (Some(_), Some(_)) => Err(ExperimentError::Config("data: set either benchmark or schema, not both".into())),
            (None, None) => Err(ExperimentError::Config("data: no benchmark and no schema given".into())),
        }
    }

    pub fn load(&self) -> Result<Dataset, ExperimentError> {
        match (self.benchmark()?, &self.csv) {
            (Some(b), None) => Ok(generate_benchmark(b, self.n, self.seed)?),
            (None, Some(path)) => Ok(load_csv(path, &self.resolve_schema()?)?),
            (Some(_), Some(_)) => Err(ExperimentError::Config("data: set either benchmark or csv, not both".into())),
            (None, None) => Err(ExperimentError::Config("data: one of benchmark or csv is required".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FidelityConfig {
    pub bins: usize,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub kinds: Vec<ClassifierKind>,
    pub seeds: Vec<u64>,
    /// Class label; the smallest training class if unset.
    pub minority: Option<String>,
    pub baseline: BaselineConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            kinds: vec![ClassifierKind::Logistic, ClassifierKind::Knn],
            seeds: (0..5).collect(),
            minority: None,
            baseline: BaselineConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Record every prompt and response as JSONL.
    pub transcript: bool,
    pub log_level: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            transcript: true,
            log_level: "info".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub pipeline: PipelineConfig,
    pub fidelity: FidelityConfig,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.data.resolve_schema()?;
        if self.data.benchmark.is_some() && self.data.n < 2 {
            return Err(ExperimentError::Config("data.n must be at least 2".into()));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return Err(ExperimentError::Config(format!(
                "split.train_fraction must lie in (0, 1), got {}",
                self.split.train_fraction
            )));
        }
        if self.fidelity.bins < 2 {
            return Err(ExperimentError::Config("fidelity.bins must be at least 2".into()));
        }
        if self.eval.kinds.is_empty() || self.eval.seeds.is_empty() {
            return Err(ExperimentError::Config("eval.kinds and eval.seeds must be non-empty".into()));
        }
        if self.eval.baseline.knn_k == 0 {
            return Err(ExperimentError::Config("eval.baseline.knn_k must be at least 1".into()));
        }
        self.pipeline
            .validate()
            .map_err(|e| ExperimentError::Config(format!("pipeline: {e}")))?;
        Ok(())
    }

    /// Pipeline settings with the benchmark's domain filled in when none is set.
    pub fn effective_pipeline(&self) -> Result<PipelineConfig, ExperimentError> {
        let mut p = self.pipeline.clone();
        if p.domain.trim().is_empty() {
            if let Some(b) = self.data.benchmark()? {
                p.domain = b.domain().to_string();
            }
        }
        Ok(p)
    }

    /// Hash of everything but the output section.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let digest = Sha256::digest(serde_json::to_string(&c).expect("serializable").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts::new(&self.output.dir)
    }

    pub fn minority_index(&self, schema: &Schema) -> Result<Option<usize>, ExperimentError> {
        self.eval
            .minority
            .as_deref()
            .map(|m| {
                schema
                    .class_index(m)
                    .ok_or_else(|| ExperimentError::Config(format!("eval.minority: unknown class '{m}'")))
            })
            .transpose()
    }
}

/// File names inside the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn train(&self) -> PathBuf {
        self.path("train.csv")
    }
    pub fn test(&self) -> PathBuf {
        self.path("test.csv")
    }
    pub fn coreset(&self) -> PathBuf {
        self.path("coreset.csv")
    }
    pub fn coreset_json(&self) -> PathBuf {
        self.path("coreset.json")
    }
    pub fn mining(&self) -> PathBuf {
        self.path("mining.json")
    }
    pub fn synthetic(&self) -> PathBuf {
        self.path("synthetic.csv")
    }
    pub fn report(&self) -> PathBuf {
        self.path("run_report.json")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.path("checkpoint.json")
    }
    pub fn transcript(&self) -> PathBuf {
        self.path("transcript.jsonl")
    }
    pub fn rejects(&self) -> PathBuf {
        self.path("rejects.jsonl")
    }
    pub fn fidelity(&self) -> PathBuf {
        self.path("fidelity.json")
    }
    pub fn metrics(&self) -> PathBuf {
        self.path("metrics.json")
    }
    pub fn manifest(&self) -> PathBuf {
        self.path("manifest.json")
    }

    pub fn ensure_dir(&self) -> Result<(), ExperimentError> {
        std::fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    write_atomic(path, contents.as_bytes()).map_err(|e| match e {
        PipelineError::Io { path, source } => ExperimentError::Io { path, source },
        other => ExperimentError::Pipeline(other),
    })
}

pub fn read_dataset(path: &Path, schema: &Schema) -> Result<Dataset, ExperimentError> {
    Ok(load_csv(path, schema)?)
}

/// Loads the configured data and splits it.
pub fn load_split(cfg: &RunConfig) -> Result<(Dataset, Dataset), ExperimentError> {
    let ds = cfg.data.load()?;
    Ok(train_test_split(&ds, cfg.split.train_fraction, cfg.split.seed)?)
}

/// The configured gateway, optionally logging to the run's transcript.
pub fn open_gateway(cfg: &RunConfig, pipeline: &PipelineConfig, resume: bool) -> Result<Gateway, ExperimentError> {
    let mut gw = Gateway::new(pipeline.build_model()?, pipeline.price);
    if cfg.output.transcript {
        let path = cfg.artifacts().transcript();
        let writer = if resume {
            TranscriptWriter::append_to(&path)?
        } else {
            TranscriptWriter::create(&path)?
        };
        gw = gw.with_transcript(writer);
    }
    Ok(gw)
}

/// Runs synthesis on `train`, checkpointing into the output directory, and
/// writes the synthetic CSV, run report, core set and parser rejects.
pub fn synthesize(cfg: &RunConfig, train: &Dataset, resume: bool) -> Result<RunReport, ExperimentError> {
    let art = cfg.artifacts();
    art.ensure_dir()?;
    let pcfg = cfg.effective_pipeline()?;
    let mut gw = open_gateway(cfg, &pcfg, resume)?;
    let ck = art.checkpoint();
    let pipeline = if resume {
        Pipeline::resume(train, pcfg, &mut gw, &ck)?
    } else {
        Pipeline::new(train, pcfg, &mut gw)?
    };
    let report = pipeline.with_checkpoints(&ck).run()?;
    write_file(&art.synthetic(), &to_csv_string(&report.synthetic))?;
    write_file(&art.report(), &report.to_json())?;
    write_coreset(cfg, &report.coreset, train)?;
    let rejects: String = report
        .trajectory
        .iter()
        .flat_map(|r| r.rejects.iter().map(move |x| {
            let mut v = serde_json::to_value(x).expect("serializable");
            v["batch"] = serde_json::json!(r.iteration);
            serde_json::to_string(&v).expect("serializable") + "\n"
        }))
        .collect();
    write_file(&art.rejects(), &rejects)?;
    Ok(report)
}

fn write_coreset(cfg: &RunConfig, core: &CoreSet, train: &Dataset) -> Result<(), ExperimentError> {
    let art = cfg.artifacts();
    Ok(core.export(train, &cfg.pipeline.probe, &art.coreset(), &art.coreset_json())?)
}

/// Trains the probe on `train` and writes the selected rows.
pub fn coreset(cfg: &RunConfig, train: &Dataset) -> Result<CoreSet, ExperimentError> {
    cfg.artifacts().ensure_dir()?;
    let (core, _) = build_coreset(train, &cfg.pipeline.probe, cfg.pipeline.coreset_k)?;
    write_coreset(cfg, &core, train)?;
    Ok(core)
}

/// Runs only the mining prompts and writes their outputs plus a checkpoint
/// that `synthesize --resume` continues from.
pub fn mine(cfg: &RunConfig, train: &Dataset) -> Result<RunState, ExperimentError> {
    let art = cfg.artifacts();
    art.ensure_dir()?;
    let pcfg = cfg.effective_pipeline()?;
    let mut gw = open_gateway(cfg, &pcfg, false)?;
    let mut pipeline = Pipeline::new(train, pcfg, &mut gw)?.with_checkpoints(art.checkpoint());
    pipeline.step()?;
    let state = pipeline.state().clone();
    if let Some(core) = &state.coreset {
        write_coreset(cfg, core, train)?;
    }
    let out = serde_json::json!({
        "codes": state.codes,
        "analysis": state.analysis,
        "constraints": state.constraints,
        "ledger": gw.ledger(),
    });
    write_file(&art.mining(), &(serde_json::to_string_pretty(&out).expect("serializable") + "\n"))?;
    Ok(state)
}

/// Re-runs synthesis with every completion read back from a transcript.
pub fn replay(cfg: &RunConfig, transcript: &Path) -> Result<RunReport, ExperimentError> {
    let (train, _) = load_split(cfg)?;
    let pcfg = cfg.effective_pipeline()?;
    let mut gw = Gateway::new(Box::new(ReplayModel::from_file(transcript)?), pcfg.price);
    Ok(Pipeline::new(&train, pcfg, &mut gw)?.run()?)
}

pub fn fidelity(cfg: &RunConfig, real: &Dataset, synth: &Dataset) -> Result<FidelityReport, ExperimentError> {
    Ok(fidelity_report(real, synth, cfg.fidelity.bins)?)
}

pub fn classify(cfg: &RunConfig, train: &Dataset, synth: &Dataset, test: &Dataset) -> Result<MetricTable, ExperimentError> {
    let minority = cfg.minority_index(train.schema())?;
    Ok(evaluate_augmentation(
        train,
        synth,
        test,
        &cfg.eval.kinds,
        &cfg.eval.seeds,
        minority,
        &cfg.eval.baseline,
    )?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_fingerprint: String,
    pub pipeline_hash: String,
    pub data_seed: u64,
    pub split_seed: u64,
    pub pipeline_seed: u64,
    pub probe_seed: u64,
    pub eval_seeds: Vec<u64>,
    pub crate_version: String,
    pub template_version: String,
    pub backend: String,
    /// File name and SHA-256 of every artifact written by the run.
    pub artifacts: Vec<(String, String)>,
    pub config: RunConfig,
}

fn sha256_file(path: &Path) -> Result<String, ExperimentError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn describe_backend(backend: &Backend, seed: u64) -> String {
    match backend {
        Backend::Mock(_) => format!("mock:seed={seed}"),
        Backend::Http(t) => format!("http:{}@{}", t.model, t.endpoint),
    }
}

pub struct PipelineOutcome {
    pub report: RunReport,
    pub fidelity: FidelityReport,
    pub metrics: MetricTable,
    pub manifest: Manifest,
}

/// split, synthesize, fidelity, classify; then the manifest.
pub fn run_all(cfg: &RunConfig, resume: bool) -> Result<PipelineOutcome, ExperimentError> {
    cfg.validate()?;
    let art = cfg.artifacts();
    art.ensure_dir()?;
    let (train, test) = load_split(cfg)?;
    write_file(&art.train(), &to_csv_string(&train))?;
    write_file(&art.test(), &to_csv_string(&test))?;
    let report = synthesize(cfg, &train, resume)?;
    let fid = fidelity(cfg, &train, &report.synthetic)?;
    write_file(&art.fidelity(), &fid.to_json())?;
    write_file(&art.path("fidelity.txt"), &fid.render_text())?;
    if let Some(c) = &fid.correlation {
        write_file(&art.path("correlation_diff.csv"), &c.diff_csv())?;
    }
    let metrics = classify(cfg, &train, &report.synthetic, &test)?;
    write_file(&art.metrics(), &metrics.to_json())?;
    write_file(&art.path("metrics.txt"), &metrics.render_text())?;

    let pcfg = cfg.effective_pipeline()?;
    let names = [
        "train.csv",
        "test.csv",
        "coreset.csv",
        "coreset.json",
        "synthetic.csv",
        "run_report.json",
        "rejects.jsonl",
        "fidelity.json",
        "metrics.json",
    ];
    let artifacts = names
        .iter()
        .map(|n| Ok((n.to_string(), sha256_file(&art.path(n))?)))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let manifest = Manifest {
        config_fingerprint: cfg.fingerprint(),
        pipeline_hash: report.config_hash.clone(),
        data_seed: cfg.data.seed,
        split_seed: cfg.split.seed,
        pipeline_seed: pcfg.seed,
        probe_seed: pcfg.probe.seed,
        eval_seeds: cfg.eval.seeds.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        template_version: TEMPLATE_VERSION.to_string(),
        backend: describe_backend(&pcfg.backend, pcfg.seed),
        artifacts,
        config: cfg.clone(),
    };
    write_file(
        &art.manifest(),
        &(serde_json::to_string_pretty(&manifest).expect("serializable") + "\n"),
    )?;
    Ok(PipelineOutcome {
        report,
        fidelity: fid,
        metrics,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_data_source() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.validate(), Err(ExperimentError::Config(_))));
        cfg.data.benchmark = Some("real_estate".into());
        assert!(cfg.validate().is_ok());
        cfg.data.csv = Some("x.csv".into());
        assert!(cfg.data.load().is_err());
        cfg.data.benchmark = Some("nope".into());
        assert_eq!(cfg.validate().unwrap_err().family(), ErrorFamily::Config);
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let mut a = RunConfig::default();
        a.data.benchmark = Some("real_estate".into());
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.pipeline.seed = 9;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn families() {
        let stall = ExperimentError::Pipeline(PipelineError::Stall {
            batches: 5,
            diagnostic: String::new(),
        });
        assert_eq!(stall.family(), ErrorFamily::Stall);
        let auth = ExperimentError::Llm(LlmError::MissingCredential("K".into()));
        assert_eq!(auth.family(), ErrorFamily::Transport);
    }
}
