use std::path::Path;
use std::process::{Command, Output};

fn deeptrust(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deeptrust"))
        .current_dir(dir)
        .env_remove("DEEPTRUST_OUT")
        .args(args)
        .output()
        .expect("spawn deeptrust")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = deeptrust(dir, args);
    assert!(
        out.status.success(),
        "deeptrust {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CORPUS: [&str; 4] = ["--users", "s/users.jsonl", "--messages", "s/messages.jsonl"];

fn with_corpus<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    [head, &CORPUS[..], tail].concat()
}

fn synth(dir: &Path, users: &str) {
    ok(dir, &["--out", "s", "synth", "--users", users, "--seed", "5", "--noise", "0.1"]);
}

#[test]
fn synth_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "a", "synth", "--users", "1000", "--seed", "7"]);
    ok(d, &["--out", "b", "synth", "--users", "1000", "--seed", "7"]);
    for f in ["users.jsonl", "messages.jsonl", "labels.csv", "lexicon.tsv"] {
        assert_eq!(
            std::fs::read(d.join("a").join(f)).unwrap(),
            std::fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let labels = std::fs::read_to_string(d.join("a/labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1001);
    assert_eq!(labels.lines().filter(|l| l.ends_with(",trusted")).count(), 500);
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("a/synth_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["args"]["users"], 1000);
}

#[test]
fn cv_larger_than_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "9");
    let out = deeptrust(d, &with_corpus(&["--out", "o", "evaluate", "naive_bayes", "--cv", "10"], &["--labels", "s/labels.csv"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("n < K"), "{}", stderr(&out));
    assert!(!d.join("o/report.json").exists());
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "120");
    ok(d, &with_corpus(&["--out", "o", "train", "deeptrust", "--epochs", "5", "--hidden", "32"], &["--labels", "s/labels.csv"]));
    for f in ["model.json", "history.csv", "train_summary.json"] {
        assert!(d.join("o").join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(d.join("o/history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,train_acc,val_loss,val_acc\n"));
    assert_eq!(history.lines().count(), 6);

    ok(d, &with_corpus(&["--out", "o", "predict", "--model", "o/model.json"], &[]));
    let preds = std::fs::read_to_string(d.join("o/predictions.csv")).unwrap();
    let mut rows = preds.lines();
    assert_eq!(rows.next(), Some("user_id,probability,label,gated"));
    let mut n = 0;
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let p: f64 = cols[1].parse().unwrap();
        assert!(p > 0.0 && p < 1.0, "{row}");
        assert!(cols[2] == "trusted" || cols[2] == "not_trusted");
        assert_eq!(cols[3], "false");
        n += 1;
    }
    assert_eq!(n, 120);
}

#[test]
fn every_baseline_trains_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "80");
    for model in ["decision_tree", "random_forest", "naive_bayes", "logistic_regression"] {
        ok(d, &with_corpus(&["--out", "o", "train", model, "--trees", "10"], &["--labels", "s/labels.csv"]));
        ok(d, &with_corpus(&["--out", "o", "predict", "--model", "o/model.json"], &[]));
        ok(d, &with_corpus(&["--out", "o", "evaluate", model, "--trees", "10"], &["--labels", "s/labels.csv"]));
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("o/report.json")).unwrap()).unwrap();
        assert_eq!(report["report"]["model"], model);
        assert_eq!(report["protocol"], "holdout");
        assert!(report["report"].get("folds").is_none());
        assert_eq!(report["config"]["args"]["model"], model);
    }
}

#[test]
fn cross_validation_report_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "100");
    ok(
        d,
        &with_corpus(
            &["--out", "o", "evaluate", "random_forest", "--cv", "5", "--compare", "naive_bayes", "--trees", "10"],
            &["--labels", "s/labels.csv"],
        ),
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["protocol"], "cross_validation");
    assert_eq!(report["report"]["folds"].as_array().unwrap().len(), 5);
    assert_eq!(report["report"]["metrics"]["n"], 100);
    assert_eq!(report["schema_version"], "deeptrust-report-v1");
    assert!(report["tool_version"].is_string());
    let cmp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("o/comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["test"]["permutations"], 32);
    let metrics = std::fs::read_to_string(d.join("o/metrics.csv")).unwrap();
    assert!(metrics.starts_with("model,n,tp,fp,tn,fn,accuracy,kappa"));
}

#[test]
fn features_reputation_and_ranking_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "60");
    let ingest = ok(d, &with_corpus(&["--out", "o", "ingest"], &[]));
    let summary: serde_json::Value = serde_json::from_slice(&ingest.stdout).unwrap();
    assert_eq!(summary["users_kept"], 60);
    assert!(d.join("o/filtered_messages.jsonl").exists());

    ok(
        d,
        &with_corpus(
            &["--out", "o", "features", "--cdf", "mean_word_count", "--scatter", "mean_word_count,listed_count"],
            &["--labels", "s/labels.csv", "--reputation-mode", "feature"],
        ),
    );
    let features = std::fs::read_to_string(d.join("o/features.csv")).unwrap();
    let header = features.lines().next().unwrap();
    assert!(header.starts_with("mean_char_count,"));
    assert!(header.ends_with(",reputation_rank,label"));
    assert_eq!(features.lines().count(), 61);
    assert!(d.join("o/cdf_mean_word_count.csv").exists());
    assert!(d.join("o/scatter.csv").exists());

    ok(d, &with_corpus(&["--out", "o", "reputation", "--theta", "0.5"], &[]));
    let rep = std::fs::read_to_string(d.join("o/reputation.csv")).unwrap();
    assert_eq!(rep.lines().next(), Some("user_id,acq_scr,acq_aff,normalized_rank,trusted"));
    assert_eq!(rep.lines().nth(1).unwrap().split(',').nth(3), Some("1"));

    ok(d, &with_corpus(&["--out", "o", "rank-features", "--trees", "10"], &["--labels", "s/labels.csv"]));
    let ranking = std::fs::read_to_string(d.join("o/feature_ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 28);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "30");
    let labels = ["--labels", "s/labels.csv"];
    for args in [
        with_corpus(&["--out", "o", "train", "--learning-rate=-1", "--batch-size", "0"], &labels),
        with_corpus(&["--out", "o", "evaluate", "--test-fraction", "1.5"], &labels),
        with_corpus(&["--out", "o", "reputation", "--theta", "2"], &[]),
        with_corpus(&["--out", "o", "features", "--cdf", "nope"], &labels),
        vec!["--out", "o", "synth", "--noise", "1.5"],
    ] {
        let out = deeptrust(d, &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
    let out = deeptrust(d, &with_corpus(&["--out", "o", "train", "--learning-rate=-1", "--batch-size", "0"], &labels));
    let msg = stderr(&out);
    assert!(msg.contains("learning_rate") && msg.contains("batch_size"), "{msg}");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [vec!["frobnicate"], vec!["synth", "--bogus"], vec!["train", "svm"], vec![]] {
        let out = deeptrust(d, &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let msg = stderr(&out);
        assert!(msg.contains("Usage") || msg.contains("--help"), "{args:?}: {msg}");
    }
    let help = deeptrust(d, &["evaluate", "--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("--cv"));
}

#[test]
fn io_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "20");
    let out = deeptrust(d, &with_corpus(&["--out", "o", "train"], &["--labels", "missing.csv"]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = deeptrust(d, &["--out", "o", "predict", "--model", "missing.json", "--users", "s/users.jsonl", "--messages", "s/messages.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(d.join("blocker"), "").unwrap();
    let out = deeptrust(d, &["--out", "blocker/sub", "synth", "--users", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_model_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "20");
    std::fs::write(d.join("bad.json"), "{\"schema_version\": \"nope\"}").unwrap();
    let out = deeptrust(d, &with_corpus(&["--out", "o", "predict", "--model", "bad.json"], &[]));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("corrupt model"), "{}", stderr(&out));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_deeptrust"))
        .current_dir(d)
        .env("DEEPTRUST_OUT", "envdir")
        .args(["synth", "--users", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.join("envdir/users.jsonl").exists());
    assert!(!d.join("out").exists());
}

#[test]
fn gate_mode_marks_gated_users() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "50");
    ok(d, &with_corpus(&["--out", "o", "train", "naive_bayes"], &["--labels", "s/labels.csv"]));
    ok(d, &with_corpus(&["--out", "o", "predict", "--model", "o/model.json", "--gate", "--theta", "0"], &[]));
    let preds = std::fs::read_to_string(d.join("o/predictions.csv")).unwrap();
    assert!(preds.lines().skip(1).all(|l| l.ends_with(",trusted,true")));
    ok(d, &with_corpus(&["--out", "o", "evaluate", "naive_bayes", "--reputation-mode", "gate", "--cv", "5"], &["--labels", "s/labels.csv"]));
}
