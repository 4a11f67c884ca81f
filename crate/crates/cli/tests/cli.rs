use std::path::PathBuf;
use std::process::{Command, Output};

use loopsum::chc::parse_clauses;
use loopsum::pathexpr::RegExpr;
use loopsum::poly::Polynomial;
use loopsum::summarize::SymInterval;
use serde_json::Value;

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/programs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopsum")).args(args).output().unwrap()
}

fn run_on(name: &str, args: &[&str]) -> Output {
    let p = program(name);
    let mut all = vec![p.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn poly(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

#[test]
fn rewritten_path_expression() {
    let out = stdout(&run_on("fig1.chc", &["--emit", "pathexpr"]));
    assert_eq!(out.trim(), "c1* (c2 c1*)* c3");
    assert_eq!(RegExpr::parse(out.trim()).unwrap().to_string(), out.trim());
}

#[test]
fn summary_json_has_published_bounds() {
    let j = json(&run_on("fig1.chc", &["--emit", "summary", "--format", "json"]));
    let b = SymInterval::from_json(&j["outputs"]["B'"]).unwrap();
    assert_eq!(b.lower, Some(vec![poly("1/2*A*(A - 1)")]));
    assert_eq!(b.upper, Some(vec![poly("B + 1/2*A*(A + 1)")]));
    let a = SymInterval::from_json(&j["outputs"]["A'"]).unwrap();
    assert_eq!(a.as_exact(), Some(&poly("0")));
    assert_eq!(j["loops"][0]["predicate"], "wh2");
}

#[test]
fn missing_file_is_a_usage_error() {
    let o = run(&["definitely-missing.chc"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run_on("fig1.chc", &["--emit", "nothing"]).status.code(), Some(2));
    assert_eq!(run_on("fig1.chc", &["--entry", "wh/3"]).status.code(), Some(2));
    assert_eq!(run_on("fig1.chc", &["--assume", "1x"]).status.code(), Some(2));
}

#[test]
fn analysis_errors_name_the_stage() {
    let o = run_on("fig1.chc", &["--fresh-counters"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solve:"));
    let dir = std::env::temp_dir().join(format!("loopsum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.chc");
    std::fs::write(&bad, "p(X) :- X>0, p(X-1), p(X-2).\n").unwrap();
    let o = run(&[bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse:"));
}

#[test]
fn check_single_loop_is_exact() {
    let j = json(&run_on("ex41.chc", &["--check", "--format", "json"]));
    let rows = j["check"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r["status"] == "exact"));
}

#[test]
fn check_nested_reports_violation() {
    let j = json(&run_on("fig1.chc", &["--check", "--format", "json"]));
    let notes = j["summary"]["fidelity_notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n == "(A,B)=(3,2): B'=1 outside [3, 8]"));
    let row = j["check"]["rows"].as_array().unwrap().iter().find(|r| r["input"] == serde_json::json!(["3", "2"])).unwrap();
    assert_eq!(row["status"], "violation");
    let text = stdout(&run_on("fig1.chc", &["--check"]));
    assert!(text.contains("(3,2) -> (0,1)  VIOLATION"));
}

#[test]
fn check_loop_free_passes() {
    let j = json(&run_on("straight.chc", &["--check", "--format", "json"]));
    assert!(j["check"]["rows"].as_array().unwrap().iter().all(|r| r["status"] != "violation"));
    assert_eq!(j["summary"]["fidelity_notes"], serde_json::json!([]));
}

#[test]
fn every_stage_is_valid_json() {
    for stage in ["cfg", "pathexpr", "path-program", "counted", "recurrences", "rd", "closed-forms", "summary", "all"] {
        let j = json(&run_on("fig1.chc", &["--emit", stage, "--format", "json"]));
        assert!(j.is_object() || j.is_string(), "{stage}: {j}");
    }
}

#[test]
fn path_programs_reparse() {
    for stage in ["path-program", "counted"] {
        let text = stdout(&run_on("fig1.chc", &["--emit", stage]));
        let clauses = parse_clauses(&text).unwrap();
        assert_eq!(clauses.len(), 5, "{stage}");
    }
}

#[test]
fn output_is_deterministic() {
    let a = stdout(&run_on("fig1.chc", &["--emit", "all", "--format", "json", "--check"]));
    let b = stdout(&run_on("fig1.chc", &["--emit", "all", "--format", "json", "--check"]));
    assert_eq!(a, b);
}

#[test]
fn rd_of_single_loop() {
    let j = json(&run_on("ex41.chc", &["--emit", "rd", "--format", "json"]));
    let l = &j["wh2"];
    // The step equation of Y applies X, so its facts also reach X.
    assert_eq!(l["rd"]["wh^X"], serde_json::json!([["K1", "e1"], ["K1", "e3"]]));
    assert_eq!(l["rd"]["halt"], serde_json::json!([["K1", "e2"], ["K1", "e4"]]));
    assert_eq!(l["symbolic_constants"], serde_json::json!(["X", "Y"]));
}

#[test]
fn sign_assumptions_are_configurable() {
    let j = json(&run_on("ex41.chc", &["--assume-nonneg", "false", "--assume", "X>=0", "--format", "json"]));
    assert_eq!(j["assumptions"]["nonneg"], serde_json::json!(["X"]));
}

#[test]
fn reverse_star_order() {
    let out = stdout(&run_on("fig1.chc", &["--emit", "pathexpr", "--star-order", "reverse"]));
    assert_eq!(out.trim(), "c2* (c1 c2*)* c3");
}

#[test]
fn log_level_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_loopsum"))
        .arg(program("fig1.chc"))
        .env("LOOPSUM_LOG", "info")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("entry wh/2"));
}
