//! Command-line behaviour: outputs, exit codes and reproducible reports.

use std::path::Path;
use std::process::{Command, Output};

use mohardy::harness::{verify, ExperimentConfig, Inequality};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mohardy"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn norm_of_two_on_left_half() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "f.csv", "2\n2\n0\n0\n");
    let out = run(&["norm", "--phi", "power:p=2", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn norm_with_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "f.csv", "1\n-1\n");
    let out = run(&["--json", "norm", "--phi", "power:p=1", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(v.to_string().contains('1'));
}

#[test]
fn walsh_coefficients_of_first_rademacher() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "r0.csv", "1\n1\n-1\n-1\n");
    let out = run(&["walsh", "coeffs", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = stdout(&out)
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect();
    assert_eq!(values, vec![0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn decompose_writes_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "f.csv", "3\n1\n-2\n-2\n");
    let out_path = dir.path().join("atoms.json");
    let out = run(&[
        "decompose",
        "--kind",
        "s",
        "--phi",
        "power:p=1",
        "--input",
        &input,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn verify_doob_passes() {
    let out = run(&[
        "verify",
        "doob",
        "--phi",
        "power:p=2",
        "--trials",
        "20",
        "--resolutions",
        "4,6",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("inequality,phi_spec,resolution,trials,max_ratio,median_ratio,worst_seed_index,pass")
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn verify_stein_with_linear_phi_is_rejected() {
    let out = run(&[
        "verify",
        "stein",
        "--phi",
        "power:p=1",
        "--trials",
        "5",
        "--resolutions",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn exploratory_mode_reports_instead_of_rejecting() {
    let out = run(&[
        "verify",
        "stein",
        "--phi",
        "power:p=1",
        "--trials",
        "5",
        "--resolutions",
        "4",
        "--exploratory",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["hypotheses"]["pass"], false);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["norm", "--phi", "nosuch:p=1", "--input", "/nonexistent"])
            .status
            .code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.csv", "1\n2\n3\n");
    assert_eq!(
        run(&["norm", "--phi", "power:p=2", "--input", &input])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn reports_are_deterministic() {
    let cfg = ExperimentConfig::new(Inequality::FiveSpace, "power:p=1.5", vec![4, 6], 30, 42);
    let (a, b) = (verify(&cfg).unwrap(), verify(&cfg).unwrap());
    assert_eq!(a.to_json_string(), b.to_json_string());
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    let other = ExperimentConfig::new(Inequality::FiveSpace, "power:p=1.5", vec![4, 6], 30, 43);
    assert_ne!(a.to_json_string(), verify(&other).unwrap().to_json_string());
}
