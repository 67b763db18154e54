mod common;

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn shardsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shardsec"))
        .args(args)
        .env_remove("SHARDSEC_BUDGET")
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
fn analyze_row_one() {
    let path = common::scenario_dir().join("row1.json");
    let out = shardsec(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["P"], "2.04e-06");
    assert_eq!(v["P_prime"], "1.56e-01");
    assert_eq!(v["P_double_prime"], "3.18e-07");
    assert_eq!(v["lambda"], 8);
    assert_eq!(v["Lambda"], 1199);
    assert_eq!(v["threshold"], 161);
}

#[test]
fn analyze_writes_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let input = common::scenario_dir().join("years_to_fail.csv");
    let out = shardsec(&["analyze", input.to_str().unwrap(), "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().next().unwrap().starts_with("label,N,K,M,M_sel"));
    assert!(text.contains(",17014.16,true"));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 8);
}

#[test]
fn threshold_mode_flag_changes_threshold() {
    let path = common::scenario_dir().join("row1.json");
    let out = shardsec(&["--threshold-mode", "floor_RK", "analyze", path.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["threshold"], 160);
    assert_eq!(v["P"], "4.74e-06");
}

#[test]
fn invalid_scenario_exits_2_and_names_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut bad = common::raw(1000, 800, 100, 200, 100, "0.333", "0.2", 365);
    bad.label = Some("bad".into());
    fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = shardsec(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("M_sel exceeds M"), "{}", stderr(&out));
}

#[test]
fn lambda_cross_check_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("row3.json");
    let mut raw = common::raw(1400, 800, 200, 200, 200, "0.333", "0.2", 365);
    raw.lambda = Some(8);
    fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();
    let out = shardsec(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lambda"), "{}", stderr(&out));
}

#[test]
fn missing_file_exits_3() {
    let out = shardsec(&["analyze", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_exits_2() {
    let out = shardsec(&["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_sweep_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let spec = serde_json::json!({
        "base": common::raw(1000, 800, 200, 200, 100, "0.25", "0.10", 365),
        "axis": "M_sel",
        "values": [],
        "outputs": ["P"],
    });
    fs::write(&path, spec.to_string()).unwrap();
    let out = shardsec(&["sweep", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty sweep"));
}

#[test]
fn bcp_sweep_output() {
    let path = common::scenario_dir().join("bcp_comparison.json");
    let out = shardsec(&["sweep", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "M=M_sel,P,P_prime,P_double_prime,bcp");
    assert_eq!(lines.len(), 21);
    assert!(lines[20].starts_with("200,"));
    assert!(!text.contains('\r'));
}

#[test]
fn verify_small_grid() {
    let out = shardsec(&["verify", "--grid", "lambda=1..2,n=2..4,m_sel=0..6"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("lambda,n,cap,m_sel,pgfa,jhda,match\n"));
    assert!(!text.contains(",false"));
    assert!(stderr(&out).contains("0 mismatches"));
}

#[test]
fn verify_catches_wrong_denominator() {
    let out = shardsec(&["verify", "--quiet", "--grid", "lambda=1..2,n=2..4,m_sel=0..6", "--inject-denominator-fault"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).is_empty());
}

#[test]
fn verify_empty_grid_exits_2() {
    let out = shardsec(&["verify", "--grid", "lambda=2..1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty grid"));
}

#[test]
fn bench_reports_refusal_over_budget() {
    let path = common::scenario_dir().join("row1.json");
    let out = shardsec(&["bench", path.to_str().unwrap(), "--reps", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["pgfa"]["status"], "completed");
    assert_eq!(v[0]["jhda_exact"]["status"], "refused");
    assert_eq!(v[0]["jhda_states"], "1785793904896");
}

#[test]
fn bench_zero_reps_exits_2() {
    let path = common::scenario_dir().join("row1.json");
    let out = shardsec(&["bench", path.to_str().unwrap(), "--reps", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.json");
    let raw = common::raw(30, 20, 8, 6, 5, "0.4", "0.3", 10);
    fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();
    let args = ["analyze", path.to_str().unwrap(), "--method", "jhda-exact"];
    let ok = shardsec(&args);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let limited = Command::new(env!("CARGO_BIN_EXE_shardsec"))
        .args(args)
        .env("SHARDSEC_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(limited.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&limited.stderr).contains("use PGFA or trials"));
}

#[test]
fn simulate_is_reproducible_and_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    let hist = dir.path().join("h.csv");
    let raw = common::raw(60, 40, 20, 12, 10, "0.3", "0.25", 1);
    fs::write(&scenario, serde_json::to_string(&raw).unwrap()).unwrap();
    let args = [
        "--seed", "9", "simulate", scenario.to_str().unwrap(), "--epochs", "20000",
        "--histogram", hist.to_str().unwrap(),
    ];
    let a = shardsec(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = shardsec(&args);
    assert_eq!(stdout(&a), stdout(&b));
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["outcome"]["generator"], "ChaCha8Rng");
    assert_eq!(v["outcome"]["seed"], 9);
    let h = fs::read_to_string(&hist).unwrap();
    assert!(h.starts_with("committee_sybil_count,frequency\n"));
}

#[test]
fn in_process_runner_matches_binary() {
    let path = common::scenario_dir().join("row1.json");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = shardsec::cli::run(["shardsec", "analyze", path.to_str().unwrap()], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), stdout(&shardsec(&["analyze", path.to_str().unwrap()])));
}
