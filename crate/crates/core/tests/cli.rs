use std::process::{Command, Output};

use serde_json::Value;

fn ehpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehpc")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const BERN: &str = "bernoulli:xlo=0,xhi=5,p=0.5";

#[test]
fn threshold_reports_bernoulli_closed_forms() {
    let out = ehpc(&["threshold", "--dist", BERN, "--reward", "awgn"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["c_star"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["c_upper"].as_f64().unwrap() - 11.0 / 3.0).abs() < 1e-8);
    assert_eq!(v["method"], "discrete-exact");
}

#[test]
fn bounds_bracket_the_threshold() {
    let out = ehpc(&["bounds", "--dist", "exponential:mu=1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let (lo, hi) = (v["c_lower"].as_f64().unwrap(), v["c_upper"].as_f64().unwrap());
    assert!(lo < 1.0888622 && 1.0888622 < hi, "{v}");
}

#[test]
fn degenerate_reward_exits_2() {
    let out = ehpc(&["threshold", "--dist", "exponential:eta=1", "--reward", "linear:slope=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("greedy policy is optimal for all capacities"));
}

#[test]
fn sweep_geometric_small_is_exact() {
    let out = ehpc(&["sweep", "--family", "geometric", "--regime", "small", "--mu", "0.01,0.1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "mu,c_star,psi,ratio");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        assert!(line.ends_with(",1"), "{line}");
    }
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_rejects_out_of_regime_means() {
    let out = ehpc(&["sweep", "--family", "uniform", "--regime", "large", "--mu", "1,100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_defaults_seed() {
    let args = ["simulate", "--dist", BERN, "--capacity", "2", "--policy", "modified:eps=0.25", "--steps", "100000"];
    let (a, b) = (ehpc(&args), ehpc(&args));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["policy"], "modified:eps=0.25");
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "7"]);
    let c = ehpc(&seeded);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_compares_policies() {
    let out = ehpc(&[
        "simulate", "--dist", BERN, "--capacity", "2", "--policy", "modified:eps=0.35", "--against", "greedy",
        "--steps", "100000", "--replicates", "10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["differences"].as_array().unwrap().len(), 10);
    assert!(v["mean_difference"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_eps_is_a_domain_error() {
    let out = ehpc(&["simulate", "--dist", BERN, "--capacity", "2", "--policy", "modified:eps=1.5", "--steps", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_routes_summary() {
    let out = ehpc(&["solve", "--dist", BERN, "--capacity", "2", "--grid", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert!(csv.starts_with("b,h,g_opt\n"));
    assert_eq!(csv.lines().count(), 65);
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["grid_n"], 64);

    let dir = std::env::temp_dir().join(format!("ehpc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("solve.csv");
    let out = ehpc(&["solve", "--dist", BERN, "--capacity", "2", "--grid", "64", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), csv);
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["gamma"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn solve_json_has_rows() {
    let out = ehpc(&["solve", "--dist", "uniform:omega=2", "--capacity", "1", "--grid", "64", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 64);
}

#[test]
fn numerical_failure_exits_three() {
    let out = ehpc(&["solve", "--dist", "exponential:mu=1", "--capacity", "2", "--max-sweeps", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn curves_header_and_rows() {
    let out = ehpc(&["curves", "--dist", BERN, "--c-min", "0.5", "--c-max", "2", "--points", "4", "--grid", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("c,gamma_star,gamma_greedy,gamma_upper"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn phicheck_detects_threshold() {
    let below: Value = serde_json::from_slice(&ehpc(&["phicheck", "--dist", BERN, "--fraction", "0.9"]).stdout).unwrap();
    assert_eq!(below["monotone"], true);
    let above: Value = serde_json::from_slice(&ehpc(&["phicheck", "--dist", BERN, "--fraction", "1.5"]).stdout).unwrap();
    assert!(above["min_left"].as_f64().unwrap() < 0.0);
}

#[test]
fn verify_runs_single_check() {
    let out = ehpc(&["verify", "--only", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("criterion  3 PASS"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(ehpc(&["nonsense"]).status.code(), Some(64));
    assert_eq!(ehpc(&["threshold"]).status.code(), Some(64));
    assert_eq!(ehpc(&["threshold", "--dist", BERN, "--bogus"]).status.code(), Some(64));
    assert_eq!(ehpc(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_specs_exit_2() {
    assert_eq!(ehpc(&["threshold", "--dist", "poisson:lambda=-1"]).status.code(), Some(2));
    assert_eq!(ehpc(&["threshold", "--dist", "bernoulli:xlo=0"]).status.code(), Some(2));
    assert_eq!(ehpc(&["threshold", "--dist", BERN, "--reward", "cubic"]).status.code(), Some(2));
}
