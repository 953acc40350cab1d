use std::path::Path;
use std::process::{Command, Output};

fn focklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_focklab"))
        .args(args)
        .env("FOCKLAB_THREADS", "2")
        .output()
        .expect("spawn focklab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn list_names_every_experiment() {
    let out = focklab(&["list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 12);
    for name in ["kernel-identities", "resolution-identity", "berezin-scan", "riemann-reconstruct"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "missing {name}");
    }
}

#[test]
fn printed_defaults_are_a_runnable_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = focklab(&["--print-defaults"]);
    assert!(out.status.success());
    let config = dir.path().join("config.json");
    std::fs::write(&config, &out.stdout).unwrap();
    let report_dir = dir.path().join("report");
    let run = focklab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", stdout(&run));
    assert!(report_dir.join("report.json").is_file());
}

#[test]
fn passing_run_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = focklab(&[
        "run",
        "--experiment",
        "kernel-identities",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: focklab::lab::ExperimentReport = focklab::lab::ExperimentReport::from_json(&json).unwrap();
    assert!(report.passed());
    let csvs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), report.tables.len());
    assert!(!csvs.is_empty());
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = focklab(&[
        "run",
        "--experiment",
        "riemann-reconstruct",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
    assert!(Path::new(&dir.path().join("report.json")).is_file());
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let out = focklab(&["run", "--experiment", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-thing"));
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field = dir.path().join("bad.json");
    std::fs::write(&bad_field, r#"{"experiment": "kernel-identities", "degre": 10}"#).unwrap();
    let out = focklab(&["run", "--config", bad_field.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let bad_value = dir.path().join("zero.json");
    std::fs::write(&bad_value, r#"{"experiment": "kernel-identities", "window": 0}"#).unwrap();
    let out = focklab(&["run", "--config", bad_value.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_experiment_is_a_usage_error() {
    let out = focklab(&["run"]);
    assert_eq!(out.status.code(), Some(2));
}
