mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use relsynth::experiment::{self, ErrorFamily, ExperimentError, RunConfig};
use relsynth::tabular::{to_csv_string, Dataset};
use thiserror::Error;

use config::ConfigError;

#[derive(Parser)]
#[command(name = "relsynth", version, about = "Feedback-driven synthetic tabular data generation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set pipeline.seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (same as `--set output.dir=...`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset as CSV.
    GenBenchmark {
        #[arg(long)]
        benchmark: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to <out>/<benchmark>.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Stratified train/test split of the configured data.
    Split,
    /// Train the probe and select the core set.
    Coreset {
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Run the relationship and constraint prompts only.
    Mine {
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Run the full generation loop.
    Synthesize {
        #[arg(long)]
        train: Option<PathBuf>,
        /// Continue from <out>/checkpoint.json.
        #[arg(long)]
        resume: bool,
    },
    /// KL divergence and correlation differences between two CSVs.
    Fidelity {
        /// Defaults to <out>/train.csv.
        #[arg(long)]
        real: Option<PathBuf>,
        /// Defaults to <out>/synthetic.csv.
        #[arg(long)]
        synth: Option<PathBuf>,
    },
    /// Train baselines on original and augmented data.
    Classify {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Defaults to <out>/synthetic.csv.
        #[arg(long)]
        synth: Option<PathBuf>,
    },
    /// split, coreset, mine, synthesize, fidelity, classify.
    Pipeline {
        #[arg(long)]
        resume: bool,
    },
    /// Re-run synthesis with completions read from a transcript.
    Replay {
        /// Defaults to <out>/transcript.jsonl.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Fail unless the result equals this report (default <out>/run_report.json when present).
        #[arg(long)]
        expect: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("replayed report differs from {0}")]
    ReplayMismatch(PathBuf),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let family = match self {
            CliError::Config(_) => ErrorFamily::Config,
            CliError::Experiment(e) => e.family(),
            CliError::ReplayMismatch(_) => ErrorFamily::Data,
        };
        match family {
            ErrorFamily::Internal => 1,
            ErrorFamily::Config => 3,
            ErrorFamily::Data => 4,
            ErrorFamily::Transport => 5,
            ErrorFamily::Stall => 6,
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut overrides = common.overrides.clone();
    if let Some(out) = &common.out {
        overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
    }
    Ok(config::load(common.config.as_deref(), &overrides)?)
}

fn init_logging(level: &str) {
    let env = env_logger::Env::default().default_filter_or(level);
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn train_set(cfg: &RunConfig, path: Option<&Path>) -> Result<Dataset, CliError> {
    Ok(match path {
        Some(p) => experiment::read_dataset(p, &cfg.data.resolve_schema()?)?,
        None => experiment::load_split(cfg)?.0,
    })
}

fn read_or(cfg: &RunConfig, path: Option<&Path>, fallback: PathBuf) -> Result<Dataset, CliError> {
    let p = path.map(Path::to_path_buf).unwrap_or(fallback);
    Ok(experiment::read_dataset(&p, &cfg.data.resolve_schema()?)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli.common)?;
    init_logging(&cfg.output.log_level);
    let art = cfg.artifacts();
    match cli.command {
        Command::GenBenchmark { benchmark, n, seed, output } => {
            if let Some(b) = benchmark {
                cfg.data.benchmark = Some(b);
            }
            cfg.data.n = n.unwrap_or(cfg.data.n);
            cfg.data.seed = seed.unwrap_or(cfg.data.seed);
            let which = cfg
                .data
                .benchmark()?
                .ok_or_else(|| ExperimentError::Config("gen-benchmark needs --benchmark or data.benchmark".into()))?;
            let ds = cfg.data.load()?;
            let path = match output {
                Some(p) => p,
                None => {
                    art.ensure_dir()?;
                    art.path(&format!("{}.csv", which.name()))
                }
            };
            experiment::write_file(&path, &to_csv_string(&ds))?;
            info!("wrote {} rows to {}", ds.len(), path.display());
        }
        Command::Split => {
            cfg.validate()?;
            art.ensure_dir()?;
            let (train, test) = experiment::load_split(&cfg)?;
            experiment::write_file(&art.train(), &to_csv_string(&train))?;
            experiment::write_file(&art.test(), &to_csv_string(&test))?;
            info!("train {} rows, test {} rows in {}", train.len(), test.len(), art.dir.display());
        }
        Command::Coreset { train } => {
            cfg.validate()?;
            let train = train_set(&cfg, train.as_deref())?;
            let core = experiment::coreset(&cfg, &train)?;
            info!("selected {} rows into {}", core.indices().len(), art.coreset().display());
        }
        Command::Mine { train } => {
            cfg.validate()?;
            let train = train_set(&cfg, train.as_deref())?;
            let state = experiment::mine(&cfg, &train)?;
            if let Some(c) = &state.constraints {
                println!("{}", c.text());
            }
            info!("mining output in {}", art.mining().display());
        }
        Command::Synthesize { train, resume } => {
            cfg.validate()?;
            let train = train_set(&cfg, train.as_deref())?;
            let report = experiment::synthesize(&cfg, &train, resume)?;
            info!(
                "{} synthetic rows in {} batches, {} tokens",
                report.synthetic.len(),
                report.trajectory.len(),
                report.ledger.total_tokens()
            );
        }
        Command::Fidelity { real, synth } => {
            let real = read_or(&cfg, real.as_deref(), art.train())?;
            let synth = read_or(&cfg, synth.as_deref(), art.synthetic())?;
            let fid = experiment::fidelity(&cfg, &real, &synth)?;
            art.ensure_dir()?;
            experiment::write_file(&art.fidelity(), &fid.to_json())?;
            print!("{}", fid.render_text());
        }
        Command::Classify { train, test, synth } => {
            cfg.validate()?;
            let (train, test) = match (train, test) {
                (Some(tr), Some(te)) => {
                    let schema = cfg.data.resolve_schema()?;
                    (experiment::read_dataset(&tr, &schema)?, experiment::read_dataset(&te, &schema)?)
                }
                (None, None) => experiment::load_split(&cfg)?,
                _ => return Err(ExperimentError::Config("give both --train and --test, or neither".into()).into()),
            };
            let synth = read_or(&cfg, synth.as_deref(), art.synthetic())?;
            let table = experiment::classify(&cfg, &train, &synth, &test)?;
            art.ensure_dir()?;
            experiment::write_file(&art.metrics(), &table.to_json())?;
            print!("{}", table.render_text());
        }
        Command::Pipeline { resume } => {
            let outcome = experiment::run_all(&cfg, resume)?;
            print!("{}", outcome.fidelity.render_text());
            print!("{}", outcome.metrics.render_text());
            info!("artifacts in {}", art.dir.display());
        }
        Command::Replay { transcript, expect } => {
            cfg.validate()?;
            let transcript = transcript.unwrap_or_else(|| art.transcript());
            let report = experiment::replay(&cfg, &transcript)?;
            art.ensure_dir()?;
            experiment::write_file(&art.path("replay_report.json"), &report.to_json())?;
            let expect = expect.or_else(|| Some(art.report()).filter(|p| p.exists()));
            match expect {
                Some(p) => {
                    let original = std::fs::read_to_string(&p).map_err(|source| ExperimentError::Io {
                        path: p.clone(),
                        source,
                    })?;
                    if original != report.to_json() {
                        return Err(CliError::ReplayMismatch(p));
                    }
                    println!("replay identical to {}", p.display());
                }
                None => warn!("no report to compare against; wrote replay_report.json"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
