use std::path::{Path, PathBuf};

use cam_core::harness::{self, parse_trace, RunOptions, TraceError, TraceLine};
use cam_core::scenario::{load_scenario, load_scenario_file, ScenarioError};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.json"))
}

fn short_run(name: &str, dir: &Path) -> harness::RunOutput {
    let mut spec = load_scenario_file(scenario_path(name)).unwrap();
    spec.duration_s = 2.0;
    harness::run(&spec, 1, dir, &RunOptions::default()).unwrap()
}

#[test]
fn bundled_scenarios_load() {
    let rb = load_scenario_file(scenario_path("roundabout")).unwrap();
    assert_eq!(rb.nodes.len(), 14);
    assert!(rb.validate().is_ok());
    let corridor = load_scenario_file(scenario_path("corridor")).unwrap();
    assert_eq!(corridor.nodes.len(), 4);
    assert!(corridor.planner.is_none());
    let yielding = load_scenario_file(scenario_path("corridor_yielding")).unwrap();
    assert!(yielding.planner.is_some() && yielding.boundary.is_some());
}

#[test]
fn scenario_errors_are_classified() {
    match load_scenario_file("/nonexistent/scenario.json") {
        Err(ScenarioError::Io { .. }) => {}
        other => panic!("expected an io error, got {other:?}"),
    }
    match load_scenario("{ not json") {
        Err(ScenarioError::Schema { line: 1, .. }) => {}
        other => panic!("expected a schema error, got {other:?}"),
    }
    let text = std::fs::read_to_string(scenario_path("corridor")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["tick_dt_s"] = serde_json::json!(-0.1);
    assert!(load_scenario(&doc.to_string()).is_err());
}

#[test]
fn empty_trace_has_no_records() {
    assert!(matches!(parse_trace(&b""[..]), Err(TraceError::NoRecords)));
    assert!(matches!(parse_trace(&b"\n\n"[..]), Err(TraceError::NoRecords)));
}

#[test]
fn truncated_trace_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run("corridor", dir.path());
    let text = std::fs::read_to_string(&out.trace_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..lines.len() - 3].join("\n");
    match parse_trace(cut.as_bytes()) {
        Err(TraceError::Missing { index }) => assert_eq!(index, lines.len() - 3),
        other => panic!("expected a truncation error, got {other:?}"),
    }
    // half a line is corrupt, not missing
    let half = &text[..text.len() - 40];
    assert!(matches!(parse_trace(half.as_bytes()), Err(TraceError::Corrupt { .. })));
}

#[test]
fn wrong_schema_version_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run("corridor", dir.path());
    let text = std::fs::read_to_string(&out.trace_path).unwrap();
    let bumped = text.replacen("\"schema_version\":1", "\"schema_version\":99", 1);
    assert!(matches!(parse_trace(bumped.as_bytes()), Err(TraceError::SchemaVersion { found: 99 })));
}

#[test]
fn trace_round_trips_through_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run("roundabout", dir.path());
    let trace = harness::read_trace_file(&out.trace_path).unwrap();
    let mut buf = Vec::new();
    harness::write_trace(&mut buf, &trace.header, &trace.ticks).unwrap();
    assert_eq!(buf, std::fs::read(&out.trace_path).unwrap());
    assert!(matches!(trace.to_lines()[0], TraceLine::Header(_)));
    assert_eq!(harness::compute_metrics(&trace), out.metrics);
}

#[test]
fn csv_has_one_row_per_tick() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run("corridor_single_person", dir.path());
    let csv_path = dir.path().join("bed.csv");
    let m = harness::replay(&out.trace_path, Some(&csv_path)).unwrap();
    assert_eq!(m, out.metrics);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "time_s");
    assert!(headers.iter().any(|h| h == "directive"));
    let rows = reader.records().count() as u64;
    assert_eq!(rows, m.ticks);
    let spec = load_scenario_file(scenario_path("corridor_single_person")).unwrap();
    assert_eq!(rows, (2.0 / spec.tick_dt_s).round() as u64);
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run("corridor", dir.path());
    for f in ["trace.ndjson", "frames.camp", "metrics.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let frames = cam_core::netsim::read_capture(&std::fs::read(dir.path().join("frames.camp")).unwrap()).unwrap();
    assert_eq!(frames.len() as u64, out.metrics.messages_sent);
}
