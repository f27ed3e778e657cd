use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kicked_top(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kicked-top"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn sidecar(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

const BOUNDARIES: &[&str] = &["boundaries", "--j", "200", "--kappa1", "4.25pi", "--kappa2", "0.5pi"];

#[test]
fn boundary_floors_in_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = kicked_top(dir.path(), BOUNDARIES);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = sidecar(dir.path(), "boundaries.meta.json");
    let floors: Vec<i64> = serde_json::from_value(meta["derived"]["floors_plus"].clone()).unwrap();
    assert_eq!(floors, vec![67, 141, 176, 194]);
    assert_eq!(meta["derived"]["pole_case_excluded"], Value::Bool(true));
    let table = fs::read_to_string(dir.path().join("boundaries.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["winding", "--j", "12", "--kappa1", "4.25pi", "--out", "w.json", "--format", "json"];
    assert!(kicked_top(dir.path(), &args).status.success());
    let first = (fs::read(dir.path().join("w.json")).unwrap(), fs::read(dir.path().join("w.meta.json")).unwrap());
    assert!(kicked_top(dir.path(), &["--threads", "1", "winding", "--j", "12", "--kappa1", "4.25pi", "--out", "w.json", "--format", "json"]).status.success());
    let second = (fs::read(dir.path().join("w.json")).unwrap(), fs::read(dir.path().join("w.meta.json")).unwrap());
    assert_eq!(first, second);
}

#[test]
fn config_replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    assert!(kicked_top(dir.path(), BOUNDARIES).status.success());
    let original = fs::read(dir.path().join("boundaries.csv")).unwrap();
    fs::rename(dir.path().join("boundaries.meta.json"), dir.path().join("saved.json")).unwrap();
    fs::remove_file(dir.path().join("boundaries.csv")).unwrap();
    let out = kicked_top(dir.path(), &["--config", "saved.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(dir.path().join("boundaries.csv")).unwrap(), original);
}

#[test]
fn verify_reference_point_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = kicked_top(dir.path(), &["verify", "--j", "50", "--kappa1", "4.25pi", "--kappa2", "0.5pi"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = sidecar(dir.path(), "verify.meta.json");
    assert_eq!(meta["derived"]["passed"], Value::Bool(true));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = kicked_top(dir.path(), &["winding", "--kappa1", "4.25pi"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--j"));

    let bad_angle = kicked_top(dir.path(), &["boundaries", "--j", "5", "--kappa1", "4.25pie"]);
    assert_eq!(bad_angle.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_angle.stderr).contains("4.25pie"));

    assert_eq!(kicked_top(dir.path(), &[]).status.code(), Some(1));
    assert_eq!(kicked_top(dir.path(), &["--help"]).status.code(), Some(0));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn output_failure_exits_two_with_json_record() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), b"").unwrap();
    let out = kicked_top(dir.path(), &["boundaries", "--j", "5", "--kappa1", "pi", "--out", "blocker/b.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let record: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(record["kind"], "io");
}

#[test]
fn plot_script_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    assert!(kicked_top(dir.path(), &["ipr", "--j", "10", "--kappa1", "4.25pi", "--delta-m", "2"]).status.success());
    assert!(!dir.path().join("ipr.plot.py").exists());
    assert!(kicked_top(dir.path(), &["ipr", "--j", "10", "--kappa1", "4.25pi", "--delta-m", "2", "--emit-plot-script"]).status.success());
    assert!(dir.path().join("ipr.plot.py").exists());
}
