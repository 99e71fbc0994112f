use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const MODEL: &str = "0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1\n";
const CYCLIC: &str = "0 -> 2 A + B @ 1\n2 A + B -> 3 A + 2 B @ 1\n3 A + 2 B -> 0 @ 1\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slowmix"))
        .args(args)
        .current_dir(dir)
        .env_remove("SLOWMIX_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.net"), MODEL).unwrap();
    fs::write(dir.path().join("cyclic.net"), CYCLIC).unwrap();
    let p = dir.path().to_path_buf();
    (dir, p)
}

#[test]
fn analyze_reports_theta_for_cyclic_networks() {
    let (_t, d) = setup();
    let o = run(&d, &["analyze", "--network", "cyclic.net"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["theta"]["theta"], 2);
    assert_eq!(v["theta"]["theta1"], 1);
    assert_eq!(v["eta0"]["labels"], serde_json::json!([0, 1, 2]));
}

#[test]
fn analyze_rejects_other_classes_with_a_report() {
    let (_t, d) = setup();
    let o = run(&d, &["analyze", "--network", "model.net"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "unsupported-class");
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "unsupported");
}

#[test]
fn malformed_network_is_an_input_error() {
    let (_t, d) = setup();
    fs::write(d.join("bad.net"), "A -> \n").unwrap();
    let o = run(&d, &["analyze", "--network", "bad.net"]);
    assert_eq!(o.status.code(), Some(1));
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "parse");
    assert_eq!(run(&d, &["analyze", "--network", "missing.net"]).status.code(), Some(1));
    assert_eq!(run(&d, &["fpt", "--bogus"]).status.code(), Some(1));
}

#[test]
fn path_prob_prints_exact_fractions() {
    let (_t, d) = setup();
    let o = run(&d, &["path-prob", "--network", "model.net", "--n-grid", "10", "--path", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("10,path,11/13,"), "{s}");
    assert!(s.contains("10,complement_cycles,2/13,"), "{s}");

    let o = run(&d, &["path-prob", "--network", "model.net", "--n-grid", "0", "--path", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0,path,infeasible,"));
}

#[test]
fn path_prob_reads_path_files_and_fits() {
    let (_t, d) = setup();
    fs::write(d.join("m.paths"), "[cycles]\n0,1\n0,0,1,1\n[excursions]\n0,2,1,1\n").unwrap();
    let o = run(
        &d,
        &["--format", "json", "path-prob", "--network", "model.net", "--n-grid", "50,100,200,400", "--paths", "m.paths"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let fit = &v["outputs"]["fit"];
    let c = fit["cycles"]["fitted_exponent"].as_f64().unwrap();
    let a = fit["with_excursions"]["fitted_exponent"].as_f64().unwrap();
    assert!((c + 1.0).abs() < 0.15, "{c}");
    assert!(a < c, "{a} vs {c}");
}

#[test]
fn simulate_is_reproducible_and_writes_boundary_stats() {
    let (_t, d) = setup();
    let args = ["simulate", "--network", "model.net", "--init", "3,0", "--t-max", "50", "--seed", "4"];
    let a = run(&d, &args);
    let b = run(&d, &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("t,reaction,A,B\n"));

    let mut with_out = args.to_vec();
    with_out.extend(["--out", "traj.csv"]);
    assert_eq!(run(&d, &with_out).status.code(), Some(0));
    assert_eq!(fs::read(d.join("traj.csv")).unwrap(), a.stdout);
    let boundary = fs::read_to_string(d.join("traj.boundary.csv")).unwrap();
    assert!(boundary.starts_with("i,nu,mu,A\n"));
    let report: Value = serde_json::from_slice(&fs::read(d.join("traj.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "simulate");

    let o = run(&d, &["simulate", "--network", "model.net", "--init", "3,0", "--t-max", "0"]);
    assert_eq!(stdout(&o), "t,reaction,A,B\n");
}

#[test]
fn seed_comes_from_the_environment() {
    let (_t, d) = setup();
    let args = ["simulate", "--network", "model.net", "--init", "3,0", "--t-max", "20"];
    let flag = run(&d, &[&args[..], &["--seed", "9"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_slowmix"))
        .args(args)
        .current_dir(&d)
        .env("SLOWMIX_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn stationary_reports_residual_and_balance() {
    let (_t, d) = setup();
    let o = run(&d, &["stationary", "--network", "model.net", "--window", "0:12,0:12", "--c", "1,1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("x_A,x_B,mass\n"), "{s}");
    assert!(s.contains("complex_balanced=true"));
    let r: f64 = s.split("balance_residual=").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(r < 1e-9);

    let o = run(&d, &["--format", "json", "stationary", "--network", "model.net", "--window", "0:12,0:12", "--c", "2,1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outputs"]["complex_balanced"], false);
    assert!(v["outputs"]["balance_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn mixing_needs_a_reference_for_unbalanced_networks() {
    let (_t, d) = setup();
    fs::write(d.join("grow.net"), "0 -> A @ 1\nA -> 2 A @ 1\n").unwrap();
    let o = run(&d, &["mixing", "--network", "grow.net", "--n-grid", "5", "--M", "10", "--window", "0:20"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mixing_with_loose_delta_crosses_at_the_first_grid_point() {
    let (_t, d) = setup();
    let o = run(
        &d,
        &["mixing", "--network", "model.net", "--n-grid", "2", "--M", "50", "--delta", "0.999", "--window", "0:30,0:30"],
    );
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let row = s.lines().nth(1).unwrap();
    assert!(row.starts_with("2,100,"), "{s}");
}

#[test]
fn mixing_accepts_a_reference_file() {
    let (_t, d) = setup();
    let o = run(&d, &["stationary", "--network", "model.net", "--window", "0:30,0:30", "--out", "pi.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let args = ["mixing", "--network", "model.net", "--n-grid", "3", "--M", "200", "--delta", "0.5", "--grid", "10",
        "--window", "0:30,0:30", "--seed", "2"];
    let with_ref = run(&d, &[&args[..], &["--reference", "pi.csv"]].concat());
    let without = run(&d, &args);
    assert_eq!(with_ref.status.code(), Some(0), "{}", String::from_utf8_lossy(&with_ref.stderr));
    assert_eq!(stdout(&with_ref), stdout(&without));
}

#[test]
fn fpt_table_and_worker_independence() {
    let (_t, d) = setup();
    let args = ["fpt", "--network", "model.net", "--n-grid", "10,20,40", "--M", "20", "--seed", "1"];
    let one = run(&d, &[&["--workers", "1"][..], &args].concat());
    let four = run(&d, &[&["--workers", "4"][..], &args].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let s = stdout(&one);
    assert!(s.starts_with("n,mean,stderr,reached,capped,absorbed\n"));
    assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(s.contains("# slope="));

    let o = run(&d, &["fpt", "--network", "model.net", "--n-grid", "10", "--M", "2", "--query", "coord:A:3"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&d, &["fpt", "--network", "model.net", "--n-grid", "10", "--query", "coord:C:3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn replicate_quick_writes_all_outputs() {
    let (_t, d) = setup();
    let o = run(&d, &["replicate-paper", "--out", "rep", "--quick", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = fs::read_dir(d.join("rep"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(files.len() >= 4, "{files:?}");
}
