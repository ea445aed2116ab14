use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cam")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.json"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_bundled_scenario() {
    let out = cam(&["validate", "--scenario", s(&scenario("roundabout"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ok (14 nodes"), "{text}");
}

#[test]
fn validate_rejects_bad_scenario_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(scenario("corridor")).unwrap();
    std::fs::write(&bad, text.replacen("\"tick_dt_s\"", "\"tick_dt_s\": -1, \"unused\"", 1)).unwrap();
    assert_eq!(cam(&["validate", "--scenario", s(&bad)]).status.code(), Some(1));
    std::fs::write(&bad, "{").unwrap();
    assert_eq!(cam(&["validate", "--scenario", s(&bad)]).status.code(), Some(1));
}

#[test]
fn missing_files_exit_with_code_2() {
    assert_eq!(cam(&["validate", "--scenario", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(cam(&["metrics", "--trace", "/nonexistent.ndjson"]).status.code(), Some(2));
    assert_eq!(cam(&["replay", "--trace", "/nonexistent.ndjson"]).status.code(), Some(2));
}

#[test]
fn run_then_metrics_and_replay_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let run = cam(&["run", "--scenario", s(&scenario("corridor")), "--seed", "4", "--out", s(&out_dir), "--fast"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let trace = out_dir.join("trace.ndjson");
    let metrics = cam(&["metrics", "--trace", s(&trace)]);
    assert_eq!(metrics.status.code(), Some(0));
    assert_eq!(metrics.stdout, run.stdout);

    let csv = dir.path().join("ticks.csv");
    let replay = cam(&["replay", "--trace", s(&trace), "--csv", s(&csv)]);
    assert_eq!(replay.status.code(), Some(0));
    assert_eq!(replay.stdout, run.stdout);
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 1);

    let stored = std::fs::read_to_string(out_dir.join("metrics.json")).unwrap();
    let a: serde_json::Value = serde_json::from_str(&stored).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(a, b);
}

#[test]
fn corrupt_trace_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.ndjson");
    std::fs::write(&trace, "").unwrap();
    assert_eq!(cam(&["metrics", "--trace", s(&trace)]).status.code(), Some(1));
    std::fs::write(&trace, "{\"kind\":\"header\"\n").unwrap();
    assert_eq!(cam(&["replay", "--trace", s(&trace)]).status.code(), Some(1));
}

#[test]
fn fast_and_realtime_conflict() {
    let out = cam(&["run", "--scenario", "x", "--out", "y", "--fast", "--realtime"]);
    assert_ne!(out.status.code(), Some(0));
}
