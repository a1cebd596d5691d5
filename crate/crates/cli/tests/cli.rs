use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crouzeix-lab"));
    cmd.env_remove("CROUZEIX_LAB_WORKERS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("valid JSON on stdout")
}

#[test]
fn verify_reports_certificate() {
    let out = run(&["verify", "--rho", "3", "--r", "0.8"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = json(&out);
    assert_eq!(cert["region"], "LargeRhoR");
    assert_eq!(cert["verdict"], true);
    assert!(cert["product"].as_f64().unwrap() <= 1.0);
    assert_eq!(cert["rho"].as_f64(), Some(3.0));
}

#[test]
fn verify_forced_region() {
    let out = run(&["verify", "--rho", "25", "--r", "0.76", "--region", "strip"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["region"], "Strip");
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(&["verify", "--rho", "0.5", "--r", "0.9"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--rho", "4", "--r", "0.2"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--rho", "four", "--r", "0.9"]).status.code(), Some(4));
    assert_eq!(run(&["verify", "--rho", "4"]).status.code(), Some(4));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(4));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn sweep_csv(dir: &Path, name: &str, extra: &[&str], workers_env: Option<&str>) -> (Option<i32>, String) {
    let path = dir.join(name);
    let mut cmd = bin();
    cmd.args(["sweep", "--rho-range", "1.01,20,12", "--r-range", "auto,9", "--output"])
        .arg(&path)
        .args(extra);
    if let Some(w) = workers_env {
        cmd.env("CROUZEIX_LAB_WORKERS", w);
    }
    let out = cmd.output().unwrap();
    (out.status.code(), std::fs::read_to_string(&path).unwrap())
}

#[test]
fn sweep_is_identical_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let (c1, one) = sweep_csv(dir.path(), "a.csv", &["--workers", "1"], None);
    let (c3, three) = sweep_csv(dir.path(), "b.csv", &["--workers", "3"], None);
    let (c4, env) = sweep_csv(dir.path(), "c.csv", &["--workers", "1"], Some("4"));
    assert_eq!((c1, c3, c4), (Some(0), Some(0), Some(0)));
    assert_eq!(one, three);
    assert_eq!(one, env);

    let mut lines = one.lines();
    assert_eq!(lines.next(), Some("rho,r,region,kappa,norm_sq,c_upper,product,verdict"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12 * 9);
    let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 8);
        assert_eq!(cols[7], "true", "{row}");
        let key = (cols[0].parse::<f64>().unwrap(), cols[1].parse::<f64>().unwrap());
        assert!(key > last, "rows out of order at {row}");
        last = key;
    }
}

#[test]
fn sweep_full_grid_all_true() {
    let out = run(&["sweep", "--rho-range", "1.0001,20,100", "--r-range", "auto,100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 100 * 100);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn sweep_single_point() {
    let out = run(&["sweep", "--rho-range", "2,2,1", "--r-range", "0.9,0.9,1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn sweep_json_matches_verify() {
    let out = run(&["sweep", "--rho-range", "3,3,1", "--r-range", "0.8,0.8,1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let arr = json(&out);
    assert_eq!(arr.as_array().unwrap().len(), 1);
    let single = json(&run(&["verify", "--rho", "3", "--r", "0.8"]));
    assert_eq!(arr[0], single);
}

#[test]
fn sweep_out_of_domain_points_fail() {
    let out = run(&["sweep", "--rho-range", "4,5,2", "--r-range", "0.1,1,4"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.contains(",OutOfDomain,")));
}

#[test]
fn sweep_errors() {
    assert_eq!(run(&["sweep", "--rho-range", "5,2,3"]).status.code(), Some(4));
    assert_eq!(run(&["sweep", "--r-range", "auto,0"]).status.code(), Some(4));
    let bad_env = bin()
        .args(["sweep", "--rho-range", "2,2,1"])
        .env("CROUZEIX_LAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/out.csv");
    let out = bin()
        .args(["sweep", "--rho-range", "2,2,1", "--output"])
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn figures_regions_and_bound_curve() {
    let out = run(&["figures", "regions", "--points", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("curve,rho,r"));
    for curve in ["lower", "r1", "r3"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{curve},"))), "{curve}");
    }

    let out = run(&["figures", "figure2", "--points", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 50);
    assert!(values.iter().all(|&v| v <= 1.0));
}

#[test]
fn replay_passes() {
    let out = run(&["replay"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["h_values"].as_array().unwrap().len(), 5);
}

#[test]
fn ratio_is_deterministic_and_bounded() {
    let args = ["ratio", "--rho", "2", "--r", "0.9", "--degree", "4", "--budget", "80", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report = json(&a);
    let best = report["result"]["best_ratio"].as_f64().unwrap();
    assert!((1.0..=2.0 + 1e-6).contains(&best));
    assert_eq!(report["result"]["evaluations"], 80);
    assert_eq!(run(&["ratio", "--rho", "0.9", "--r", "1"]).status.code(), Some(2));
    assert_eq!(run(&["ratio", "--rho", "2", "--r", "0.9", "--degree", "40"]).status.code(), Some(4));
}

#[test]
fn perm_three_cycle_with_shift() {
    let out = run(&["perm", "--a", "1+1i", "--diag", "1,2,3", "--perm", "(0 1 2)", "--budget", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["pass"], true);
    assert_eq!(report["block_sizes"], serde_json::json!([3]));
}

#[test]
fn perm_rejects_bad_input() {
    assert_eq!(run(&["perm", "--diag", "1,2,3", "--perm", "(0 1 5)"]).status.code(), Some(4));
    assert_eq!(run(&["perm", "--diag", "1,2,3", "--perm", "(0 1)(1 2)"]).status.code(), Some(4));
    assert_eq!(run(&["perm", "--diag", "1,x", "--perm", "(0 1)"]).status.code(), Some(4));
    assert_eq!(run(&["perm", "--a", "1+", "--diag", "1,2", "--perm", "(0 1)"]).status.code(), Some(4));
}
