use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stormtopics"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const MESSAGES: [(&str, &str, &str); 7] = [
    ("alice", "2012-10-28T09:00:00Z", "Sandy flooding downtown"),
    ("alice", "2012-10-29T09:00:00Z", "#sandy power gone"),
    ("bob", "2012-10-29T13:00:00Z", "sandy outage uptown http://t.co/x"),
    ("carol", "2012-10-30T01:00:00Z", "storm power lines down"),
    ("carol", "2012-10-30T02:00:00Z", "SANDY storm surge"),
    ("carol", "2012-10-31T02:00:00Z", "sandy wind damage"),
    ("bob", "2012-11-01T02:00:00Z", "power outage again"),
];

fn write_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("messages.jsonl");
    let lines: Vec<String> = MESSAGES
        .iter()
        .enumerate()
        .map(|(i, (user, ts, text))| json!({"id": i + 1, "user_id": user, "timestamp": ts, "text": text, "lang": "en"}).to_string())
        .collect();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn doc_ids(archive: &Path) -> Vec<String> {
    fs::read_to_string(archive.join("docs.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// Everything except the echoed config, which names the output directory.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    dir_bytes(dir).into_iter().filter(|(n, _)| n != "resolved_config.json").collect()
}

fn simulate(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("sim{seed}"));
    ok(&["simulate", "--out", p(&out), "--seed", seed, "--sim-docs", "60", "--sim-words", "30", "--sim-topics", "3", "--sim-doc-len", "15"]);
    out
}

#[test]
fn ingest_fixture_keeps_every_record() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_fixture(tmp.path());
    let out = tmp.path().join("corpus");
    let summary = ok(&["ingest", "--input", p(&input), "--out", p(&out), "--min-count", "1"]);
    assert_eq!(summary["documents"], 7);
    assert_eq!(summary["top_word_share"]["reference"], 0.30);
    for name in ["vocab.tsv", "docs.jsonl", "meta.json", "ingest_report.json", "resolved_config.json", "versions.json"] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn ingest_keyword_and_activity_filters_match_hand_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_fixture(tmp.path());
    let out = tmp.path().join("corpus");
    ok(&["ingest", "--input", p(&input), "--out", p(&out), "--min-count", "1", "--keyword", "sandy", "--min-user-messages", "2"]);
    // "sandy" appears in records 1, 2, 3, 5, 6; of those, alice has two and carol two, bob one.
    assert_eq!(doc_ids(&out), ["1", "2", "5", "6"]);
}

#[test]
fn ingest_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_fixture(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["ingest", "--input", p(&input), "--out", p(&a), "--min-count", "1"]);
    ok(&["ingest", "--input", p(&input), "--out", p(&b), "--min-count", "1"]);
    assert_eq!(outputs(&a), outputs(&b));
}

#[test]
fn ingest_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_fixture(tmp.path());
    let out = tmp.path().join("x");
    assert_eq!(run(&["ingest", "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(run(&["ingest", "--input", "/nonexistent.jsonl", "--out", p(&out)]).status.code(), Some(3));
    assert_eq!(run(&["ingest", "--input", p(&input), "--out", p(&out), "--keyword", "tsunami"]).status.code(), Some(4));
    assert_eq!(run(&["ingest", "--input", p(&input), "--out", p(&out), "--min-count", "1000"]).status.code(), Some(4));
    assert_eq!(run(&["ingest", "--input", p(&input), "--out", p(&out), "--min-user-messages", "0"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_fixture(tmp.path());
    let out = tmp.path().join("corpus");
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("input = {:?}\nmin_count = 1\nseed = 5\nkeyword = \"power\"\n", p(&input))).unwrap();
    ok(&["ingest", "--config", p(&cfg), "--out", p(&out), "--seed", "9"]);
    let echoed: Value = serde_json::from_slice(&fs::read(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(echoed["seed"], 9);
    assert_eq!(echoed["min_count"], 1);
    assert_eq!(echoed["keyword"], "power");
    assert_eq!(echoed["burn_in"], 500);
    assert_eq!(doc_ids(&out), ["2", "4", "7"]);

    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(run(&["ingest", "--config", p(&cfg), "--out", p(&out)]).status.code(), Some(2));
}

#[test]
fn train_writes_model_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = simulate(tmp.path(), "1");
    let out = tmp.path().join("model");
    let summary = ok(&["train", "--corpus", p(&corpus), "--out", p(&out), "--k", "2", "--burn-in", "40", "--samples", "2", "--lag", "5"]);
    assert_eq!(summary["sweeps"], 45);
    let phi = fs::read_to_string(out.join("phi.csv")).unwrap();
    assert_eq!(phi.lines().count(), 3);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 47);
    let hyper: Value = serde_json::from_slice(&fs::read(out.join("hyper.json")).unwrap()).unwrap();
    assert_eq!(hyper["K"], 2);
    assert_eq!(hyper["alpha"], 25.0);
}

#[test]
fn resumed_training_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = simulate(tmp.path(), "2");
    let args = |out: &Path| -> Vec<String> {
        ["train", "--corpus", p(&corpus), "--out", p(out), "--k", "3", "--burn-in", "30", "--samples", "3", "--lag", "4", "--seed", "8"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");
    let a = args(&full);
    ok(&a.iter().map(String::as_str).collect::<Vec<_>>());

    let mut halted = args(&part);
    halted.extend(["--halt-after".into(), "17".into()]);
    let summary = ok(&halted.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(summary["halted_at"], 17);
    assert!(!part.join("phi.csv").exists());

    let mut resumed = args(&part);
    resumed.extend(["--resume".into(), p(&part.join("checkpoint.bin")).into()]);
    ok(&resumed.iter().map(String::as_str).collect::<Vec<_>>());
    for name in ["phi.csv", "theta.csv", "trace.csv", "hyper.json"] {
        assert_eq!(fs::read(full.join(name)).unwrap(), fs::read(part.join(name)).unwrap(), "{name}");
    }

    // A checkpoint from a different configuration is refused.
    let mut wrong = args(&tmp.path().join("wrong"));
    wrong[6] = "4".into();
    wrong.extend(["--resume".into(), p(&part.join("checkpoint.bin")).into()]);
    assert_eq!(bin().args(&wrong).output().unwrap().status.code(), Some(2));
}

#[test]
fn periodic_checkpoints_do_not_change_the_result() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = simulate(tmp.path(), "3");
    let base = ["train", "--corpus", p(&corpus), "--k", "2", "--burn-in", "20", "--samples", "2", "--lag", "3"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&[&base[..], &["--out", p(&a)]].concat());
    ok(&[&base[..], &["--out", p(&b), "--checkpoint-every", "7"]].concat());
    assert!(b.join("checkpoint.bin").is_file());
    assert_eq!(fs::read(a.join("phi.csv")).unwrap(), fs::read(b.join("phi.csv")).unwrap());
}

#[test]
fn train_rejects_zero_topics() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = simulate(tmp.path(), "4");
    let out = tmp.path().join("m");
    assert_eq!(run(&["train", "--corpus", p(&corpus), "--out", p(&out), "--k", "0"]).status.code(), Some(2));
    assert_eq!(run(&["train", "--corpus", p(&out), "--out", p(&out), "--k", "2"]).status.code(), Some(3));
}

#[test]
fn sweep_marks_failed_k_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = simulate(tmp.path(), "5");
    let out = tmp.path().join("sweep");
    let out_s = p(&out).to_string();
    let args = [
        "sweep", "--corpus", p(&corpus), "--out", &out_s, "--k-list", "2,3,999", "--burn-in", "20", "--samples", "2", "--lag", "3",
        "--eval-burn-in", "5", "--eval-samples", "3", "--eval-lag", "1", "--record-timing", "false",
    ];
    let output = run(&args);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("999"));
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "k,perplexity,fit_seconds,chosen");
    assert!(rows[3].starts_with("999,failed,"));
    assert_eq!(rows.iter().filter(|r| r.ends_with(",1")).count(), 1);

    let again = tmp.path().join("again");
    let mut args2 = args;
    let again_s = p(&again).to_string();
    args2[4] = &again_s;
    run(&args2);
    assert_eq!(csv, fs::read_to_string(again.join("curve.csv")).unwrap());

    assert_eq!(run(&["sweep", "--corpus", p(&corpus), "--out", &out_s, "--k-list", ""]).status.code(), Some(2));
}

#[test]
fn report_outputs_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = simulate(tmp.path(), "6");
    let model = tmp.path().join("model");
    ok(&["train", "--corpus", p(&corpus), "--out", p(&model), "--k", "3", "--burn-in", "20", "--samples", "2", "--lag", "2"]);
    let out = tmp.path().join("report");
    ok(&["report", "--corpus", p(&corpus), "--model", p(&model), "--out", p(&out), "--n-words", "4"]);
    let topics: Value = serde_json::from_slice(&fs::read(out.join("topics.json")).unwrap()).unwrap();
    assert_eq!(topics.as_array().unwrap().len(), 3);
    assert!(topics.as_array().unwrap().iter().all(|t| t["top_words"].as_array().unwrap().len() == 4));
    for name in ["prevalence.csv", "wordcloud.csv", "heatmap.csv"] {
        assert!(out.join(name).is_file());
    }
    let missing = tmp.path().join("missing");
    assert_eq!(run(&["report", "--corpus", p(&corpus), "--model", p(&missing), "--out", p(&out)]).status.code(), Some(3));
}

#[test]
fn simulate_truth_is_stochastic_and_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let a = simulate(tmp.path(), "7");
    let b = tmp.path().join("b");
    ok(&["simulate", "--out", p(&b), "--seed", "7", "--sim-docs", "60", "--sim-words", "30", "--sim-topics", "3", "--sim-doc-len", "15"]);
    assert_eq!(outputs(&a), outputs(&b));
    let phi = fs::read_to_string(a.join("phi_true.csv")).unwrap();
    for row in phi.lines().skip(1) {
        let sum: f64 = row.split(',').map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    let c = tmp.path().join("c");
    ok(&["simulate", "--out", p(&c), "--seed", "8", "--sim-docs", "60", "--sim-words", "30", "--sim-topics", "3", "--sim-doc-len", "15"]);
    assert_ne!(fs::read(a.join("docs.jsonl")).unwrap(), fs::read(c.join("docs.jsonl")).unwrap());
}

#[test]
fn versions_file_is_written_first() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    // Fails on arguments, but only after the run record exists.
    run(&["train", "--out", p(&out), "--k", "2"]);
    assert!(out.join("versions.json").is_file());
    assert!(out.join("resolved_config.json").is_file());
}
