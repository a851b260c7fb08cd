//! The `edgeflow` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_edgeflow");

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn edgeflow(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("EDGEFLOW_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn single_node_without_readings_converges_immediately() {
    let dir = TempDir::new().unwrap();
    let config = scenario_file("single.toml");
    let o = edgeflow(
        dir.path(),
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--format",
            "structured",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["converged"], true);
    assert_eq!(report["convergence_round"], 0);
    assert_eq!(report["rounds"], 0);
    assert_eq!(report["fridge"]["final_alerts"]["0"], serde_json::json!([]));
    assert!(dir.path().join("fridge-seed0.report.json").exists());
    let trace = std::fs::read_to_string(dir.path().join("fridge-seed0.trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    assert!(
        trace.starts_with(r#"{"round":0,"node":0,"event":"converge""#),
        "{trace}"
    );
}

#[test]
fn fridge_sample_writes_report_and_trace() {
    let dir = TempDir::new().unwrap();
    let config = scenario_file("fridge.toml");
    let trace_path = dir.path().join("nested").join("t.log");
    let o = edgeflow(
        dir.path(),
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "11",
            "--trace",
            trace_path.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("seed: 11"));
    assert!(text.contains("local alert latency 0"), "{text}");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("fridge-seed11.report.txt")).unwrap(),
        text
    );
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert!(trace.lines().any(|l| l.contains("event=alert")));
    assert!(!dir.path().join("fridge-seed11.trace.log").exists());
}

#[test]
fn structured_trace_is_one_json_record_per_line() {
    let dir = TempDir::new().unwrap();
    let config = scenario_file("gossip.toml");
    let o = edgeflow(
        dir.path(),
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--format",
            "structured",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("gossip-seed1.trace.jsonl")).unwrap();
    let events = [
        "update", "send", "drop", "dup", "deliver", "alert", "converge",
    ];
    for line in trace.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(events.contains(&record["event"].as_str().unwrap()));
        let keys: Vec<&str> = record
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        assert_eq!(keys, ["event", "node", "payload", "round"]);
        assert!(line.starts_with(r#"{"round":"#), "{line}");
    }
}

#[test]
fn bad_configs_exit_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = edgeflow(dir.path(), &["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.toml"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "scenario = \"fridge\"\nnodes = 2\nmax_rounds = 5\n[fridge]\nthreshold_celsius = 8.0\nreadings = [{ round = 1, node = 5, temp_celsius = 9.0 }]\n",
    )
    .unwrap();
    let o = edgeflow(dir.path(), &["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nonexistent node 5"), "{}", stderr(&o));

    let o = edgeflow(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = edgeflow(dir.path(), &["fuzz", "--max-ops", "0", "--replicas", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn laws_subcommand_passes() {
    let dir = TempDir::new().unwrap();
    let o = edgeflow(dir.path(), &["laws", "--iterations", "200", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 24);
    assert!(text.contains("orset.associativity (200 cases)"));
}

#[test]
fn fuzz_subcommand_reports_count() {
    let dir = TempDir::new().unwrap();
    let o = edgeflow(
        dir.path(),
        &[
            "fuzz",
            "--max-ops",
            "2",
            "--replicas",
            "3",
            "--samples",
            "50",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let report = edgeflow_cli::fuzz::run(2, 3, 0, 0);
    assert!(
        text.contains(&format!("interleavings checked: {}", report.interleavings)),
        "{text}"
    );
    assert!(text.contains("sampled runs: 50"));
}

#[test]
fn help_exits_cleanly() {
    let dir = TempDir::new().unwrap();
    let o = edgeflow(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fuzz"));
}
