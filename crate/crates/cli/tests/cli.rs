use std::path::Path;
use std::process::{Command, Output};

fn relsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relsynth"))
        .args(args)
        .env_remove("RUST_LOG")
        .env_remove("RDDG_API_KEY")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"
[data]
benchmark = "real_estate"
n = 400

[pipeline]
n_target = 90
seed = 3

[eval]
kinds = ["logistic"]
seeds = [0, 1]

[output]
dir = "{}"
log_level = "warn"
"#,
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_config_is_a_config_error_naming_the_path() {
    let o = relsynth(&["--config", "/definitely/not/here.toml", "split"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/definitely/not/here.toml"), "{}", stderr(&o));
}

#[test]
fn invalid_values_and_unknown_keys_report_the_key() {
    let o = relsynth(&["--set", "data.benchmark=real_estate", "--set", "split.train_fraction=1.5", "split"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("split.train_fraction"), "{}", stderr(&o));

    let o = relsynth(&["--set", "pipeline.batch_sise=3", "split"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("pipeline.batch_sise"), "{}", stderr(&o));
}

#[test]
fn credentials_are_not_accepted_in_config() {
    let o = relsynth(&[
        "--set",
        "pipeline.backend.kind=http",
        "--set",
        "pipeline.backend.api_key=sk-test",
        "split",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("credential_env"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(relsynth(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(relsynth(&["split", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn missing_credential_is_a_transport_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = relsynth(&[
        "--out",
        &out,
        "--set",
        "data.benchmark=real_estate",
        "--set",
        "data.n=200",
        "--set",
        "pipeline.backend.kind=http",
        "mine",
    ]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("RDDG_API_KEY"), "{}", stderr(&o));
}

#[test]
fn fidelity_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("re.csv");
    let csv_s = csv.display().to_string();
    let out = dir.path().display().to_string();
    let o = relsynth(&["--out", &out, "gen-benchmark", "--benchmark", "real_estate", "--n", "300", "--output", &csv_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = relsynth(&[
        "--out",
        &out,
        "--set",
        "data.benchmark=real_estate",
        "fidelity",
        "--real",
        &csv_s,
        "--synth",
        &csv_s,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fidelity.json")).unwrap()).unwrap();
    assert_eq!(report["kl"]["mean"].as_f64(), Some(0.0), "{report}");
    let corr = &report["correlation"];
    for key in ["frobenius", "mae", "rmse", "max_diff"] {
        assert_eq!(corr[key].as_f64(), Some(0.0), "{key}: {report}");
    }
}

#[test]
fn pipeline_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg_s = cfg.display().to_string();
    let o = relsynth(&["--config", &cfg_s, "pipeline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Sensitivity"), "{stdout}");
    let out = dir.path().join("out");
    for name in [
        "train.csv",
        "test.csv",
        "coreset.csv",
        "coreset.json",
        "synthetic.csv",
        "run_report.json",
        "fidelity.json",
        "metrics.json",
        "transcript.jsonl",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let synth = std::fs::read_to_string(out.join("synthetic.csv")).unwrap();
    assert!(synth.lines().count() > 90);

    let o = relsynth(&["--config", &cfg_s, "replay"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("replay identical"));

    // a transcript from another seed does not replay to the stored report
    let o = relsynth(&["--config", &cfg_s, "--set", "pipeline.seed=4", "replay"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn staged_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg_s = cfg.display().to_string();
    let out = dir.path().join("out");
    let o = relsynth(&["--config", &cfg_s, "split"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let train = out.join("train.csv").display().to_string();
    let o = relsynth(&["--config", &cfg_s, "coreset", "--train", &train]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("coreset.json").exists());
    let o = relsynth(&["--config", &cfg_s, "mine", "--train", &train]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("mining.json").exists());
    let o = relsynth(&["--config", &cfg_s, "synthesize", "--train", &train, "--resume"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = relsynth(&["--config", &cfg_s, "classify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Macro-F1"));
}
