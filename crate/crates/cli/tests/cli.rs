use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_asymgame"));
    c.env_remove("ASYMGAME_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("asymgame-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn value_three_quarters() {
    let v = json(&["value", "--p", "3/4"]);
    assert!((f(&v["v"]) - 0.35267910).abs() < 1e-7);
}

#[test]
fn value_half_is_half() {
    let v = json(&["value", "--p", "0.5"]);
    assert_eq!(f(&v["v"]), 0.5);
}

#[test]
fn value_methods_agree() {
    let v = json(&["value", "--p", "0.6667", "--method", "both"]);
    assert!(f(&v["discrepancy"]) < 1e-12);
}

#[test]
fn bigfloat_value_keeps_digits() {
    let v = json(&["--precision", "bigfloat:256", "value", "--p", "0.73275300915"]);
    let s = v["v"].to_string();
    assert!(s.starts_with("0.3614695404545039874"), "{s}");
    assert!(s.len() > 60);
}

#[test]
fn precision_from_environment() {
    let out = bin()
        .env("ASYMGAME_PRECISION", "rational")
        .args(["value", "--p", "3/5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["precision"], "rational");
    // 3/5 is in the closed-form regime: v = 3/7
    assert!((f(&v["v"]) - 3.0 / 7.0).abs() < 1e-15);
}

#[test]
fn sweep_rows() {
    let out = run(&["--format", "csv", "sweep", "--p-min", "0.5", "--p-max", "0.75", "--step", "1/12"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,v_sigma_star,upper_bound_p_over_4p_minus_1,lower_bound_quarter"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r[1] <= r[2] + 1e-15 && r[1] >= r[3]);
        if r[0] <= 2.0 / 3.0 + 1e-12 {
            assert!((r[1] - r[2]).abs() < 1e-12);
        }
    }
    assert!((rows[3][1] - 0.35267910).abs() < 1e-7);
}

#[test]
fn csv_output_is_byte_stable() {
    let args = ["--format", "csv", "sweep", "--p-min", "0.5", "--p-max", "0.8", "--step", "0.01"];
    let a = run(&args).stdout;
    let b = run(&args).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let args = ["--format", "csv", "simulate", "--p", "0.7", "--rounds", "20000", "--replicates", "3", "--seed", "5"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn json_round_trips() {
    let out = run(&["perturb", "--p", "3/4", "--k0", "7", "--epsilon", "0.01"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&v).unwrap();
    assert_eq!(again.trim_end(), text.trim_end());
}

#[test]
fn bad_inputs_exit_two() {
    for args in [
        &["value", "--p", "1.5"][..],
        &["value", "--p", "0.3"],
        &["value", "--p", "abc"],
        &["sweep", "--step", "0"],
        &["sweep", "--step", "-0.1"],
        &["nonsense"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn certify_chain_covers_the_range() {
    let out = run(&["certify", "--auto", "--p-lo", "0.667", "--p-hi", "0.719023"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn certify_outside_the_range_fails() {
    let out = run(&["certify", "--scheme", "three", "--p", "0.71"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn perturb_exit_codes() {
    let v = json(&["perturb", "--p", "3/4", "--k0", "7", "--epsilon", "0.01"]);
    assert!(f(&v["margin"]) > 1e-5);
    assert_eq!(v["verdict"], "Better");
    // a large epsilon overshoots
    let out = run(&["perturb", "--p", "3/4", "--k0", "7", "--epsilon", "0.05"]);
    assert_eq!(out.status.code(), Some(1));
    // zero perturbation cannot be decided
    let out = run(&["perturb", "--p", "3/4", "--k0", "7", "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn respond_passes_inside_the_range() {
    let v = json(&["respond", "--p", "0.70"]);
    assert_eq!(v["inequality_report"]["passed"], true);
    let out = run(&["respond", "--p", "0.75"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_one_row_per_replicate() {
    let out = run(&[
        "--format", "csv", "simulate", "--p", "0.6", "--strat2", "always-r", "--rounds", "10000", "--replicates", "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,rounds,mean,ci95,strat1,strat2,p");
    assert_eq!(lines.len(), 5);
}

#[test]
fn config_file_supplies_flags() {
    let cfg = scratch("value.json");
    std::fs::write(&cfg, r#"{"command": "value", "p": "0.75", "method": "both"}"#).unwrap();
    let v = json(&["--config", cfg.to_str().unwrap()]);
    assert!((f(&v["v"]) - 0.35267910).abs() < 1e-7);
    assert!(v.get("discrepancy").is_some());
    // explicit flags win
    let v = json(&["--config", cfg.to_str().unwrap(), "value", "--p", "0.6"]);
    assert!((f(&v["v"]) - 0.6 / 1.4).abs() < 1e-12);
}

#[test]
fn out_flag_writes_a_file() {
    let path = scratch("v.csv");
    let out = run(&["--format", "csv", "--out", path.to_str().unwrap(), "value", "--p", "0.7"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
}
