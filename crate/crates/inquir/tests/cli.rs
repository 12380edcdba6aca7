mod common;

use common::*;
use std::process::{Command, Output};

fn inquirc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inquirc")).args(args).env_remove("INQUIRC_COLOR").output().unwrap()
}

fn path(rel: &str) -> String {
    fixture_path(rel).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn parse_prints_back() {
    let o = inquirc(&["parse", &path("examples/example1.inq")]);
    assert_eq!(o.status.code(), Some(0));
    let again = inquir::ast::parse_program(&stdout(&o)).unwrap();
    assert_eq!(again, program("examples/example1.inq"));
}

#[test]
fn parse_error_has_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.inq");
    std::fs::write(&f, "process 0 {\n  x = ;\n}\n").unwrap();
    let o = inquirc(&["parse", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:7"));
}

#[test]
fn check_reports_double_free() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("df.inq");
    std::fs::write(&f, "process 0 { x = init(); free x; free x; }").unwrap();
    let o = inquirc(&["check", f.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["code"], "DOUBLE_FREE");
    let ok = inquirc(&["check", &path("examples/example1.inq")]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn run_deadlock_exits_3() {
    let o = inquirc(&["run", &path("examples/example4.inq"), "--arch", &path("arch/line3_e1.json"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "stuck");
    assert_eq!(v["stuck"]["kind"]["kind"], "deadlock");
}

#[test]
fn run_with_forced_outcomes_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("t.jsonl");
    let o = inquirc(&[
        "run",
        &path("examples/example1.inq"),
        "--arch",
        &path("arch/line3_e1.json"),
        "--outcomes",
        "1011",
        "--trace",
        tr.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> =
        std::fs::read_to_string(&tr).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().any(|e| e["rule"] == "rcx"));
    let steps: Vec<u64> = lines.iter().map(|e| e["step"].as_u64().unwrap()).collect();
    assert!(steps.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn run_fuel_exits_4() {
    let o = inquirc(&["run", &path("examples/example1.inq"), "--arch", &path("arch/line3_e1.json"), "--fuel", "2"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn compile_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let inq = dir.path().join("ising.inq");
    let o = inquirc(&["compile", &path("bench/ising_model_16.qasm"), "--arch", "linear:8x2,2", "-o", inq.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = dir.path().join("tl.csv");
    let o = inquirc(&[
        "analyze",
        inq.to_str().unwrap(),
        "--arch",
        "linear:8x2,2",
        "--format",
        "json",
        "--timeline",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["e_count"], 140);
    assert_eq!(v["c_count"], 280);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("time_ns,processor,remaining_ops\n"));
}

#[test]
fn analyze_with_cost_file() {
    let dir = tempfile::tempdir().unwrap();
    let cost = dir.path().join("cost.json");
    std::fs::write(&cost, r#"{"genent_ns": 0, "measure_ns": 0, "send_ns": 0}"#).unwrap();
    let o = inquirc(&["analyze", &path("bench/rd53_138.qasm"), "--arch", "cube:2,3", "--cost", cost.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["total_cost_ns"].as_u64().unwrap() < 45620);
}

#[test]
fn sweep_csv_quotes_arch_names() {
    let o = inquirc(&["sweep", &path("bench/rd53_138.qasm"), "--arch", "linear:8x2,2", "--arch", "linear:2x1,1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains("\"linear:8x2,2\",122,244,"));
    assert!(rows[2].ends_with("architecture has 2\""));
}

#[test]
fn bad_arch_is_usage_error() {
    let o = inquirc(&["analyze", &path("bench/rd53_138.qasm"), "--arch", "ring:3"]);
    assert_eq!(o.status.code(), Some(1));
}
