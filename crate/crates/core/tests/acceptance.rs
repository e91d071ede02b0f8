//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relsynth::coreset::{per_sample_variance, select_coreset, train_probe_with_schedule, ProbeConfig, ProbeNetwork};
use relsynth::eval::{classification_metrics, evaluate_augmentation, BaselineConfig, ClassifierKind, Condition, ConfusionMatrix};
use relsynth::feedback::{simulate_calibration, AscentSpec, Directive, FeedbackReport, StepRule, REPORT_HEADER};
use relsynth::fidelity::{
    correlation_diff_from_matrices, correlation_diff_metrics, dataset_kl, kl_divergence_binned, kl_from_masses,
    CorrelationMatrix, KL_EPSILON,
};
use relsynth::llm::{read_transcript, TranscriptWriter};
use relsynth::pipeline::{gateway_for, run_pipeline, PipelineConfig};
use relsynth::prompt::{parse_generated_rows, render_rows};
use relsynth::stats::{ks_statistic, pearson};
use relsynth::tabular::{generate_benchmark, train_test_split, AttributeSpec, Benchmark, Dataset, Schema, Value};

/// Prints the verdict line, then fails the test if the criterion did not hold.
/// Written to the stderr handle directly so libtest's capture does not hide it.
fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    let _ = writeln!(std::io::stderr(), "[{id:02}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

// ---------------------------------------------------------------------------
// naive oracles

fn o_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn o_std(x: &[f64]) -> f64 {
    let m = o_mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn o_pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (o_mean(x), o_mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Largest gap between the two empirical CDFs, checked at every sample point.
fn o_ks(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&t| (cdf(a, t) - cdf(b, t)).abs()).fold(0.0, f64::max)
}

/// Bins on the real column's z-score range; a value's bin is the number of
/// interior edges at or below it.
fn o_kl(real: &[f64], synth: &[f64], k: usize) -> f64 {
    let (m, s) = (o_mean(real), o_std(real));
    let z = |v: f64| (v - m) / s;
    let lo = real.iter().map(|&v| z(v)).fold(f64::INFINITY, f64::min);
    let hi = real.iter().map(|&v| z(v)).fold(f64::NEG_INFINITY, f64::max);
    let edges: Vec<f64> = (1..k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect();
    let masses = |xs: &[f64]| {
        let mut c = vec![0.0; k];
        for &v in xs {
            c[edges.iter().filter(|&&e| z(v) >= e).count()] += 1.0;
        }
        c.iter()
            .map(|n| (n / xs.len() as f64 + KL_EPSILON) / (1.0 + k as f64 * KL_EPSILON))
            .collect::<Vec<f64>>()
    };
    let (p, q) = (masses(real), masses(synth));
    p.iter().zip(&q).map(|(p, q)| p * (p / q).ln()).sum()
}

struct Naive {
    f1: f64,
    bal: f64,
    sens: f64,
    spec: f64,
    counts: Vec<Vec<u64>>,
}

fn o_classification(t: &[usize], p: &[usize], c: usize, minority: usize) -> Naive {
    let mut counts = vec![vec![0u64; c]; c];
    let mut recall = vec![0.0; c];
    let mut f1 = vec![0.0; c];
    let mut support = vec![0.0; c];
    for k in 0..c {
        let tp = t.iter().zip(p).filter(|(a, b)| **a == k && **b == k).count() as f64;
        let sup = t.iter().filter(|&&a| a == k).count() as f64;
        let pred = p.iter().filter(|&&b| b == k).count() as f64;
        recall[k] = if sup > 0.0 { tp / sup } else { 0.0 };
        let prec = if pred > 0.0 { tp / pred } else { 0.0 };
        f1[k] = if prec + recall[k] > 0.0 { 2.0 * prec * recall[k] / (prec + recall[k]) } else { 0.0 };
        support[k] = sup;
    }
    for (&a, &b) in t.iter().zip(p) {
        counts[a][b] += 1;
    }
    let others: Vec<f64> = (0..c).filter(|&k| k != minority).map(|k| recall[k]).collect();
    Naive {
        f1: f1.iter().zip(&support).map(|(f, s)| f * s).sum::<f64>() / t.len() as f64,
        bal: recall.iter().sum::<f64>() / c as f64,
        sens: recall[minority],
        spec: others.iter().sum::<f64>() / others.len() as f64,
        counts,
    }
}

fn numeric_dataset(cols: &[Vec<f64>]) -> Dataset {
    let mut attrs: Vec<AttributeSpec> = (0..cols.len()).map(|i| AttributeSpec::numeric(format!("x{i}"), "")).collect();
    attrs.push(AttributeSpec::categorical("y", "", ["a", "b"]));
    let schema = Schema::new(attrs, "y").unwrap();
    let rows = (0..cols[0].len())
        .map(|r| {
            let mut v: Vec<Value> = cols.iter().map(|c| Value::Num(c[r])).collect();
            v.push(Value::Cat(["a", "b"][r % 2].into()));
            v
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn random_columns(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Vec<f64>> {
    let base: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (0..d)
        .map(|j| {
            let scale = rng.random_range(0.5..50.0);
            let shift = rng.random_range(-100.0..100.0);
            let w = rng.random_range(-1.0..1.0);
            base.iter()
                .map(|b| shift + scale * (w * b + rng.random_range(-1.0..1.0) + j as f64 * 0.01))
                .collect()
        })
        .collect()
}

#[test]
fn c01_metric_oracles() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut exact_ok = true;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(2..=6);
        let n_real = rng.random_range(2..=300);
        let n_syn = rng.random_range(2..=300);
        let real_cols = random_columns(&mut rng, d, n_real);
        let syn_cols = random_columns(&mut rng, d, n_syn);
        let real = numeric_dataset(&real_cols);
        let synth = numeric_dataset(&syn_cols);

        let kl = dataset_kl(&real, &synth, 50).unwrap();
        for (j, (_, v)) in kl.per_attribute.iter().enumerate() {
            worst = worst.max((v - o_kl(&real_cols[j], &syn_cols[j], 50)).abs());
        }
        let k = rng.random_range(2..=20);
        worst = worst.max((kl_divergence_binned(&real_cols[0], &syn_cols[1], k).unwrap() - o_kl(&real_cols[0], &syn_cols[1], k)).abs());
        for j in 0..d {
            worst = worst.max((ks_statistic(&real_cols[j], &syn_cols[j]).unwrap() - o_ks(&real_cols[j], &syn_cols[j])).abs());
        }
        worst = worst.max((pearson(&real_cols[0], &real_cols[1]).unwrap() - o_pearson(&real_cols[0], &real_cols[1])).abs());

        let cd = correlation_diff_metrics(&real, &synth).unwrap();
        let mut diffs = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let (r, s) = if i == j {
                    (1.0, 1.0)
                } else {
                    (o_pearson(&real_cols[i], &real_cols[j]), o_pearson(&syn_cols[i], &syn_cols[j]))
                };
                diffs.push((r - s).abs());
            }
        }
        let fro = diffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst
            .max((cd.frobenius - fro).abs())
            .max((cd.mae - diffs.iter().sum::<f64>() / (d * d) as f64).abs())
            .max((cd.rmse - fro / d as f64).abs())
            .max((cd.max_diff - diffs.iter().copied().fold(0.0, f64::max)).abs());

        let c = rng.random_range(2..=4);
        let n = rng.random_range(1..=300);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let p: Vec<usize> = (0..n)
            .map(|i| if rng.random_bool(0.6) { t[i] } else { rng.random_range(0..c) })
            .collect();
        let minority = rng.random_range(0..c);
        let got = classification_metrics(&t, &p, c, minority).unwrap().metrics;
        let want = o_classification(&t, &p, c, minority);
        exact_ok &= ConfusionMatrix::from_labels(&t, &p, c).unwrap().counts == want.counts;
        exact_ok &= got.sensitivity == want.sens;
        worst = worst
            .max((got.macro_f1_weighted - want.f1).abs())
            .max((got.balanced_accuracy - want.bal).abs())
            .max((got.specificity - want.spec).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "metric oracles",
        worst <= 1e-10 && exact_ok && within(elapsed, 10),
        format!("100 instances, max abs deviation {worst:.3e}, integer counts exact: {exact_ok}, {elapsed:.2?}"),
    );
}

#[test]
fn c02_hand_values() {
    let kl = kl_from_masses(&[0.5, 0.5], &[0.25, 0.75]);
    let ks = ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap();
    let m = |r: f64| CorrelationMatrix {
        attributes: vec!["a".into(), "b".into()],
        values: vec![vec![1.0, r], vec![r, 1.0]],
        degenerate: vec![],
    };
    let cd = correlation_diff_from_matrices(m(0.8), m(0.5)).unwrap();
    let (t, p) = {
        let mut t = Vec::new();
        let mut p = Vec::new();
        for (truth, pred, n) in [(1, 1, 8), (1, 0, 2), (0, 0, 90), (0, 1, 10)] {
            t.extend(std::iter::repeat_n(truth, n));
            p.extend(std::iter::repeat_n(pred, n));
        }
        (t, p)
    };
    let cm = classification_metrics(&t, &p, 2, 1).unwrap().metrics;
    let checks = [
        ("kl", (kl - 0.1438).abs() <= 1e-4),
        ("ks", ks == 0.5),
        ("frobenius", (cd.frobenius - 0.4243).abs() <= 1e-4 && (cd.frobenius - 0.18f64.sqrt()).abs() <= 1e-6),
        ("mae", (cd.mae - 0.15).abs() <= 1e-6),
        ("rmse", (cd.rmse - 0.045f64.sqrt()).abs() <= 1e-6),
        ("max_diff", (cd.max_diff - 0.3).abs() <= 1e-6),
        ("sensitivity", cm.sensitivity == 0.8),
        ("specificity", cm.specificity == 0.9),
        ("balanced accuracy", cm.balanced_accuracy == 0.85),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        2,
        "hand values",
        failed.is_empty(),
        format!(
            "kl {kl:.6}, ks {ks}, frobenius {:.6}, mae {:.6}, rmse {:.6}, max {:.6}, confusion ({}, {}, {}); failed: {failed:?}",
            cd.frobenius, cd.mae, cd.rmse, cd.max_diff, cm.sensitivity, cm.specificity, cm.balanced_accuracy
        ),
    );
}

#[test]
fn c03_probe_gradient_check() {
    let start = Instant::now();
    let cfg = ProbeConfig {
        seed: 11,
        ..ProbeConfig::default()
    };
    let mut net = ProbeNetwork::new(4, 3, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let ys = [0, 2, 1, 1, 0];
    let (_, analytic) = net.loss_and_grad(&xs, &ys);
    let h = 1e-5;
    let mut numeric = vec![0.0; analytic.len()];
    for i in 0..analytic.len() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = net.loss(&xs, &ys);
        net.params_mut()[i] = orig - h;
        let down = net.loss(&xs, &ys);
        net.params_mut()[i] = orig;
        numeric[i] = (up - down) / (2.0 * h);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let rel = norm(&diff) / norm(&analytic).max(norm(&numeric));
    let elapsed = start.elapsed();
    verdict(
        3,
        "probe gradient check",
        rel < 1e-4 && within(elapsed, 5),
        format!("{} parameters, relative error {rel:.3e}, {elapsed:.2?}", analytic.len()),
    );
}

#[test]
fn c04_coreset_planting() {
    let start = Instant::now();
    let n = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let centre = if y == 0 { -1.5 } else { 1.5 };
        xs.push(vec![
            centre + rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            centre * 0.5 + rng.random_range(-1.0..1.0),
        ]);
        ys.push(y);
    }
    let mut flipped = vec![false; n];
    let mut count = 0;
    while count < n / 10 {
        let i = rng.random_range(0..n);
        if !flipped[i] {
            flipped[i] = true;
            count += 1;
        }
    }
    let cfg = ProbeConfig::default();
    let flip_epoch = cfg.epochs / 2;
    let trace = train_probe_with_schedule(&xs, &ys, 2, &cfg, |epoch, labels| {
        if epoch == flip_epoch {
            for i in 0..n {
                if flipped[i] {
                    labels[i] = 1 - labels[i];
                }
            }
        }
    })
    .unwrap();
    let scores = per_sample_variance(&trace).unwrap();
    let mean_of = |want: bool| {
        let v: Vec<f64> = (0..n).filter(|&i| flipped[i] == want).map(|i| scores.values[i]).collect();
        o_mean(&v)
    };
    let (flip_var, clean_var) = (mean_of(true), mean_of(false));
    let final_labels: Vec<usize> = (0..n).map(|i| if flipped[i] { 1 - ys[i] } else { ys[i] }).collect();
    let cols: Vec<Vec<f64>> = (0..3).map(|j| xs.iter().map(|x| x[j]).collect()).collect();
    let mut ds = numeric_dataset(&cols);
    ds = Dataset::new(
        ds.schema().clone(),
        ds.rows()
            .iter()
            .zip(&final_labels)
            .map(|(r, &y)| {
                let mut v = r.values.clone();
                *v.last_mut().unwrap() = Value::Cat(["a", "b"][y].into());
                v
            })
            .collect(),
    )
    .unwrap();
    let core = select_coreset(&ds, &scores, 25).unwrap();
    let hits = core.indices().iter().filter(|&&i| flipped[i]).count();
    let share = hits as f64 / 50.0;
    let elapsed = start.elapsed();
    verdict(
        4,
        "coreset planting",
        flip_var > clean_var && share >= 0.6 && within(elapsed, 60),
        format!("mean variance flipped {flip_var:.4} vs clean {clean_var:.4}, flipped share of top-25x2 {share:.2}, {elapsed:.2?}"),
    );
}

#[test]
fn c05_feedback_convergence_under_mock() {
    let start = Instant::now();
    let ds = generate_benchmark(Benchmark::RealEstate, 1000, 0).unwrap();
    let (train, _) = train_test_split(&ds, 0.8, 0).unwrap();
    let cfg = PipelineConfig {
        n_target: 200,
        batch_size: 30,
        domain: Benchmark::RealEstate.domain().into(),
        ..PipelineConfig::default()
    };
    let tau = cfg.thresholds.mean;
    let mut gw = gateway_for(&cfg).unwrap();
    let report = run_pipeline(&train, cfg, &mut gw).unwrap();
    let traj = &report.trajectory;
    let recorded = !traj.is_empty() && traj.iter().all(|r| r.quality.is_some());
    let mut fired = 0;
    let mut unresolved = Vec::new();
    for (i, rec) in traj.iter().enumerate() {
        for d in &rec.directives {
            let Directive::AdjustMeans(items) = d else { continue };
            for (attr, _) in items {
                fired += 1;
                let later = &traj[i + 1..traj.len().min(i + 6)];
                let ok = later
                    .iter()
                    .any(|r| r.quality.as_ref().unwrap().attribute(attr).unwrap().mean_diff < tau);
                if !ok {
                    unresolved.push(format!("{attr}@{}", i + 1));
                }
            }
        }
    }
    let path: Vec<String> = traj
        .iter()
        .map(|r| format!("{:.3}", r.quality.as_ref().map_or(f64::NAN, |q| q.max_mean_diff())))
        .collect();
    let elapsed = start.elapsed();
    verdict(
        5,
        "feedback convergence (mock)",
        recorded && fired > 0 && unresolved.is_empty() && within(elapsed, 30),
        format!(
            "{} batches, max |mean diff| per batch [{}], {fired} mean directives, unresolved {unresolved:?}, {elapsed:.2?}",
            traj.len(),
            path.join(", ")
        ),
    );
}

#[test]
fn c06_calibration_simulator() {
    let start = Instant::now();
    let spec = AscentSpec::scalar(2.0, 1.0, (-100.0, 100.0), 0.0, StepRule::harmonic(1.0), 1.0);
    let errs: Vec<f64> = (0..20u64)
        .map(|s| (simulate_calibration(&spec, 10_000, s).unwrap().last()[0] - 2.0).abs())
        .collect();
    let mean_err = o_mean(&errs);
    let constant = AscentSpec::scalar(2.0, 1.0, (-100.0, 100.0), 0.0, StepRule::Constant { c: 0.1 }, 1.0);
    let rejected = constant.validate().is_err() && simulate_calibration(&constant, 10, 0).is_err();
    let elapsed = start.elapsed();
    verdict(
        6,
        "calibration simulator",
        mean_err < 0.05 && rejected && within(elapsed, 10),
        format!("mean |phi_T - 2| over 20 seeds {mean_err:.4}, constant step rejected: {rejected}, {elapsed:.2?}"),
    );
}

#[test]
fn c07_parser_round_trip() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, (schema, codes)) in [("travel", common::travel()), ("thyroid", common::thyroid())] {
        let text = common::fixture(&format!("{name}_output.txt"));
        let parsed = parse_generated_rows(&text, &schema, &codes);
        let again = parse_generated_rows(&render_rows(&parsed.accepted, &codes), &schema, &codes);
        let ok = parsed.accepted.len() == 4 && parsed.rejects.is_empty() && again.accepted == parsed.accepted && again.rejects.is_empty();
        pass &= ok;
        lines.push(format!("{name}: {} rows, {} rejects, round trip {}", parsed.accepted.len(), parsed.rejects.len(), again.accepted == parsed.accepted));
    }
    verdict(7, "parser round trip", pass, lines.join("; "));
}

#[test]
fn c08_batch_cursor_and_feedback_order() {
    let full = generate_benchmark(Benchmark::RealEstate, 400, 2).unwrap();
    let by_class = full.indices_by_class();
    let pick: Vec<usize> = by_class[0][..45].iter().chain(&by_class[1][..30]).copied().collect();
    let train = full.select(&pick);
    let cfg = PipelineConfig {
        n_target: 7 * 30,
        batch_size: 30,
        domain: Benchmark::RealEstate.domain().into(),
        ..PipelineConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.jsonl");
    let mut gw = gateway_for(&cfg).unwrap().with_transcript(TranscriptWriter::create(&path).unwrap());
    let report = run_pipeline(&train, cfg, &mut gw).unwrap();
    let cursors: Vec<usize> = report.trajectory.iter().map(|r| r.cursor).collect();
    let prompts: Vec<String> = read_transcript(&path)
        .unwrap()
        .into_iter()
        .filter(|e| e.phase == "generation")
        .map(|e| e.messages[0].content.clone())
        .collect();

    let mut order_ok = prompts.len() == report.trajectory.len() && !prompts[0].contains(REPORT_HEADER);
    let mut carried = 0;
    for i in 1..prompts.len() {
        let prev = &report.trajectory[i - 1];
        if prev.directives.is_empty() {
            order_ok &= !prompts[i].contains(REPORT_HEADER);
        } else {
            carried += 1;
            let block = FeedbackReport {
                quality: prev.quality.clone().unwrap(),
                directives: prev.directives.clone(),
            }
            .render();
            order_ok &= prompts[i].ends_with(&format!("\n\n{block}")) && prompts[i].matches(REPORT_HEADER).count() == 1;
        }
    }
    verdict(
        8,
        "batch cursor and feedback order",
        cursors == [1, 2, 3, 1, 2, 3, 1] && order_ok && carried > 0,
        format!("cursor trace {cursors:?}, first prompt without feedback and each later prompt ends with the previous report: {order_ok} ({carried} reports carried)"),
    );
}

#[test]
fn c09_augmentation_sensitivity() {
    let start = Instant::now();
    let mut wins = 0;
    let mut lines = Vec::new();
    // One benchmark draw and split; only the pipeline seed varies.
    let ds = generate_benchmark(Benchmark::RealEstate, 1000, 0).unwrap();
    let (train, test) = train_test_split(&ds, 0.8, 0).unwrap();
    for seed in 0..5u64 {
        let cfg = PipelineConfig {
            seed,
            domain: Benchmark::RealEstate.domain().into(),
            ..PipelineConfig::default()
        };
        let mut gw = gateway_for(&cfg).unwrap();
        let report = run_pipeline(&train, cfg, &mut gw).unwrap();
        let table = evaluate_augmentation(
            &train,
            &report.synthetic,
            &test,
            &[ClassifierKind::Logistic],
            &[seed],
            None,
            &BaselineConfig::default(),
        )
        .unwrap();
        let o = table.row(Condition::Original).unwrap().sensitivity.mean;
        let a = table.row(Condition::Augmented).unwrap().sensitivity.mean;
        if a >= o {
            wins += 1;
        }
        lines.push(format!("{o:.3}->{a:.3}"));
    }
    let elapsed = start.elapsed();
    verdict(
        9,
        "augmentation sensitivity",
        wins >= 4 && within(elapsed, 60),
        format!("augmented >= original in {wins}/5 seeds [{}], {elapsed:.2?}", lines.join(", ")),
    );
}

#[test]
fn c10_reproducibility() {
    use relsynth::experiment::{replay, run_all, RunConfig};

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut cfg = RunConfig::default();
    cfg.data.benchmark = Some("real_estate".into());
    cfg.data.n = 500;
    cfg.pipeline.n_target = 150;
    cfg.pipeline.seed = 7;
    let mut outcomes = Vec::new();
    for d in &dirs {
        cfg.output.dir = d.path().to_path_buf();
        outcomes.push(run_all(&cfg, false).unwrap());
    }
    let read = |i: usize, name: &str| std::fs::read(dirs[i].path().join(name)).unwrap();
    let mut identical = Vec::new();
    for name in ["synthetic.csv", "fidelity.json", "metrics.json"] {
        identical.push((name, read(0, name) == read(1, name) && !read(0, name).is_empty()));
    }
    let same_hashes = outcomes[0].manifest.artifacts == outcomes[1].manifest.artifacts;

    let replayed = replay(&cfg, &dirs[1].path().join("transcript.jsonl")).unwrap();
    let replay_exact = replayed == outcomes[1].report && replayed.to_json() == outcomes[1].report.to_json();

    verdict(
        10,
        "reproducibility",
        identical.iter().all(|(_, ok)| *ok) && same_hashes && replay_exact,
        format!(
            "byte-identical {identical:?}, artifact hashes equal: {same_hashes}, replayed report identical: {replay_exact} ({} synthetic rows)",
            replayed.synthetic.len()
        ),
    );
}
