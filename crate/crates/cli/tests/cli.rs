use polmine_core::languages::starbac::campus;
use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polmine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polmine"))
        .args(args)
        .env("POLMINE_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = polmine(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const EXAMPLE: &str = "\
Alice,c
Alice,m
Bob,c
Bob,m
Charlie,c
Charlie,d
";

fn example_config(dir: &Path, extra: &str) -> String {
    fs::write(dir.join("auth.csv"), EXAMPLE).unwrap();
    let path = dir.join("run.json");
    fs::write(
        &path,
        format!(r#"{{"language": "rbac", "size": 2, "data": {{"matrix": "auth.csv"}}{extra}}}"#),
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn mines_the_example_matrix_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_config(dir.path(), "");
    let out = dir.path().join("out");
    ok(&["mine", "--config", &config, "--out-dir", out.to_str().unwrap()]);
    let metrics = json(&out.join("metrics.json"));
    assert_eq!(metrics["loss"], 0.0);
    assert_eq!(metrics["training"]["tpr"], 1.0);
    assert_eq!(metrics["training"]["fpr"], 0.0);
    let policy = json(&out.join("policy.json"));
    assert_eq!(policy["language"], "rbac");
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,beta,expected_loss,true_loss\n"));
    assert_eq!(trace.lines().count(), 201);

    ok(&[
        "eval",
        "--config",
        &config,
        "--policy",
        out.join("policy.json").to_str().unwrap(),
        "--out-dir",
        dir.path().join("eval").to_str().unwrap(),
    ]);
    let m = json(&dir.path().join("eval/metrics.json"));
    assert_eq!(m["tpr"], 1.0);
    assert_eq!(m["fpr"], 0.0);
}

#[test]
fn oracle_finds_a_zero_loss_policy() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_config(dir.path(), "");
    let stdout = ok(&["oracle", "--config", &config, "--beta", "1", "--out-dir", dir.path().to_str().unwrap()]);
    let report: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(report["facts"], 12);
    assert_eq!(report["min_loss"], 0.0);
    assert_eq!(report["ordering_violations"], 0);
}

#[test]
fn missing_language_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("auth.csv"), EXAMPLE).unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, r#"{"data": {"matrix": "auth.csv"}}"#).unwrap();
    let out = polmine(&["mine", "--config", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("language"));
    assert!(!dir.path().join("policy.json").exists());
}

#[test]
fn unknown_subcommand_and_missing_config_fail() {
    assert!(!polmine(&["frobnicate"]).status.success());
    assert!(!polmine(&["mine"]).status.success());
    let out = polmine(&["mine", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_config(
        dir.path(),
        r#", "restarts": 2, "checkpoint_every": 10, "schedule": {"iterations": 45}"#,
    );
    let full = dir.path().join("full");
    ok(&["mine", "--config", &config, "--seed", "5", "--out-dir", full.to_str().unwrap()]);
    let cp = full.join("checkpoints/restart-1.json");
    let saved = json(&cp);
    assert_eq!(saved["iteration"], 40);

    let resumed = dir.path().join("resumed");
    ok(&[
        "mine",
        "--config",
        &config,
        "--seed",
        "5",
        "--resume",
        cp.to_str().unwrap(),
        "--out-dir",
        resumed.to_str().unwrap(),
    ]);
    for f in ["policy.json", "trace.csv", "metrics.json"] {
        assert_eq!(
            fs::read(full.join(f)).unwrap(),
            fs::read(resumed.join(f)).unwrap(),
            "{f} differs after resuming"
        );
    }
}

#[test]
fn resume_rejects_a_foreign_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_config(dir.path(), r#", "restarts": 1, "checkpoint_every": 10, "schedule": {"iterations": 20}"#);
    let a = dir.path().join("a");
    ok(&["mine", "--config", &config, "--seed", "1", "--out-dir", a.to_str().unwrap()]);
    let cp = a.join("checkpoints/restart-0.json");
    let out = polmine(&["mine", "--config", &config, "--seed", "2", "--resume", cp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synthetic_log_is_seeded_and_labelled() {
    let a = ok(&["synth", "starbac", "--count", "300", "--seed", "4"]);
    let b = ok(&["synth", "starbac", "--count", "300", "--seed", "4"]);
    let c = ok(&["synth", "starbac", "--count", "300", "--seed", "5"]);
    assert_eq!(a, b);
    assert_ne!(a, c);

    let main = campus().into_iter().find(|b| b.name == "Main").unwrap();
    let mut rows = csv::Reader::from_reader(a.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["user", "permission", "decision", "month", "day", "hour", "ux", "uy", "px", "py"]
    );
    let (mut n, mut near_main) = (0, 0);
    for r in rows.records() {
        let r = r.unwrap();
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        n += 1;
        if main.within(f(6), f(7), 3.0) && main.within(f(8), f(9), 3.0) {
            near_main += 1;
            assert_eq!(&r[2], "allow", "users and objects near Main are always allowed: {r:?}");
        }
    }
    assert_eq!(n, 300);
    assert!(near_main > 0);
}

#[test]
fn gridsearch_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_config(
        dir.path(),
        r#", "folds": 3, "restarts": 1, "grid": {"size": [1, 2], "lambda": [0, 0.5]}"#,
    );
    let out = dir.path().join("grid");
    ok(&["gridsearch", "--config", &config, "--fpr-cap", "1", "--out-dir", out.to_str().unwrap()]);
    let table = fs::read_to_string(out.join("grid.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,size,tpr,fpr,precision,complexity,over_grant,selected"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",true")).count(), 1);
    let outcome = json(&out.join("grid.json"));
    assert_eq!(outcome["meets_cap"], true);
}

#[test]
fn crossval_reports_every_fold() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_config(dir.path(), r#", "restarts": 1"#);
    let out = dir.path().join("cv");
    ok(&["crossval", "--config", &config, "--folds", "3", "--out-dir", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("crossval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 + 1);
    assert!(csv.lines().last().unwrap().starts_with("mean,"));
    let report = json(&out.join("crossval.json"));
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
}
