use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use safeopt::experiment::RunSummary;
use safeopt::optimizer::RunTrace;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn safeopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safeopt")).args(args).output().unwrap()
}

fn text(out: &[u8]) -> String {
    String::from_utf8_lossy(out).into_owned()
}

#[test]
fn run_writes_round_trippable_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let cfg = config("synthetic.toml");
    let res = safeopt(&["run", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", text(&res.stderr));

    let csv = std::fs::read_to_string(out.join("seed_0003.csv")).unwrap();
    let trace = RunTrace::load(out.join("seed_0003.csv")).unwrap();
    assert_eq!(trace.to_csv_string().unwrap(), csv);
    assert_eq!(trace.len(), 30);
    assert!(csv.starts_with("n,point,a0,output,width,score,y0,y1,safe,maximizers,expanders,best,best_a0,best_lower,status\n"));

    let summary: RunSummary =
        serde_json::from_str(&std::fs::read_to_string(out.join("seed_0003.json")).unwrap()).unwrap();
    assert_eq!(summary.seed, 3);
    assert_eq!(summary.evaluations, 30);
    assert!(summary.oracle_gap.is_some());
    assert!(out.join("config.toml").exists());

    let again = dir.path().join("b");
    let res = safeopt(&["run", cfg.to_str().unwrap(), "--seed", "3", "--out", again.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(std::fs::read(again.join("seed_0003.csv")).unwrap(), csv.as_bytes());
    assert_eq!(
        std::fs::read(again.join("seed_0003.json")).unwrap(),
        std::fs::read(out.join("seed_0003.json")).unwrap()
    );

    let res = safeopt(&["summarize", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", text(&res.stderr));
    assert!(text(&res.stdout).contains("violation rate 0.0000"));
    let growth = std::fs::read_to_string(out.join("growth.csv")).unwrap();
    assert!(growth.starts_with("n,mean,min,max\n"));
    assert_eq!(growth.lines().count(), 31);
}

#[test]
fn dry_run_prints_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let res = safeopt(&["run", config("step_response.toml").to_str().unwrap(), "--dry-run", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", text(&res.stderr));
    let printed = text(&res.stdout);
    assert!(printed.contains("schema_version = 1"));
    assert!(printed.contains("seeds = [7]"));
    assert!(printed.contains("actuation_lag = 0.15"));
    assert!(!out.exists());
}

#[test]
fn oracle_exports_truth_and_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("synthetic.toml");
    let res = safeopt(&["oracle", cfg.to_str().unwrap(), "--seed", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", text(&res.stderr));
    let truth = std::fs::read_to_string(dir.path().join("truth_0005.csv")).unwrap();
    assert!(truth.starts_with("point,a0,y0,y1\n"));
    assert_eq!(truth.lines().count(), 51);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle_0005.json")).unwrap()).unwrap();
    assert!(report["optimum"].is_f64());
    assert!(!report["reachable"].as_array().unwrap().is_empty());

    let res = safeopt(&["oracle", config("step_response.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(text(&res.stderr).contains("benchmark.kind"));
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let body = std::fs::read_to_string(config("synthetic.toml")).unwrap().replace("epsilon = 0.1", "epsilon = 0.1\nepsilom = 0.2");
    std::fs::write(&bad, body).unwrap();
    let res = safeopt(&["run", bad.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(text(&res.stderr).contains("epsilom"), "{}", text(&res.stderr));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let res = safeopt(&["summarize", empty.to_str().unwrap()]);
    assert!(!res.status.success());
}
