use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn maser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maser"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

const SMALL: &[&str] = &["sweep", "--mode", "maser", "--N", "10", "--max", "5", "--steps", "50"];

#[test]
fn sweep_csv_to_stdout() {
    let out = maser(SMALL);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# version:"));
    assert!(text.contains("# seed:"));
    assert!(text.contains("# config:"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("axis_value,tau,e12,e13,e23,e0,b"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 51);
}

#[test]
fn sweep_json_then_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let mut args = SMALL[..SMALL.len() - 1].to_vec();
    args.extend(["200", "--out", path.to_str().unwrap()]);
    let out = maser(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let file: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file["metadata"]["config"]["steps"], 200);
    assert_eq!(file["rows"].as_array().unwrap().len(), 200);

    let out = maser(&["peaks", path.to_str().unwrap()]);
    assert!(out.status.success());
    let peaks: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(peaks["peaks"].as_array().unwrap().len() >= 2);
    assert!(peaks["second_peak"]["b"].as_f64().unwrap() > 0.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"mode": "laser", "N": 30, "kappa": 0.001, "steps": 7, "max": 4, "format": "json"}"#,
    )
    .unwrap();
    let out = maser(&["sweep", "--config", cfg.to_str().unwrap(), "--steps", "3", "--phi2", "-0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = &v["metadata"]["config"];
    assert_eq!(c["steps"], 3);
    assert_eq!(c["base"]["N"], 30.0);
    assert_eq!(c["base"]["kappa"], 0.001);
    assert_eq!(c["phases"]["phi2"], -0.5);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_input_gives_error_line_and_nonzero_exit() {
    let out = maser(&["sweep", "--steps", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(error_line(&out)["error"]["kind"], "config");

    let out = maser(&["sweep", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"]["kind"], "usage");

    let out = maser(&["peaks", "/nonexistent/sweep.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let e = error_line(&out);
    assert_eq!(e["error"]["kind"], "io");
    assert!(e["error"]["message"].as_str().unwrap().contains("/nonexistent/sweep.csv"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"stepz": 3}"#).unwrap();
    let out = maser(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_oracle_run() {
    let out = maser(&[
        "oracle", "--N", "2", "--kappa", "0.01", "--D", "1", "--trajectories", "100", "--n-max", "8",
        "--tol", "0.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["trajectories"], 100);
    assert_eq!(r["n_max"], 8);
    assert!(r["l1"].as_f64().unwrap() < 0.5);
    assert_eq!(r["pass"], true);
}

#[test]
fn help_exits_zero() {
    assert!(maser(&["--help"]).status.success());
    assert!(maser(&["sweep", "--help"]).status.success());
}
