use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn groupsample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupsample")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_SHANNON: &str = "experiment = shannon\nhalf = 16\nnodes = 512\nfunctions = 3\n";

#[test]
fn run_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SHANNON);
    let out = dir.path().join("out");
    let o = groupsample(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS frame_bounds"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "shannon");
    assert_eq!(report["config"]["half"], "16");
    assert_eq!(report["version"].as_str().unwrap().len(), 64);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["frame_bounds", "reconstruction", "undersampling_collapse"]);
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.starts_with("r,step,points,dim,lower,upper,tightness,max_rel_error\n0.5,1,32,"));
    let points = fs::read_to_string(out.join("points.csv")).unwrap();
    assert_eq!(points.lines().filter(|l| !l.starts_with('#')).count(), 32);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = partition\nhalf = 8\nnodes = 256\nconfigs = 2\nfunctions = 2\nseed = 5\n");
    let read = |name: &str| {
        let out = dir.path().join(name);
        let o = groupsample(&["run", &cfg, "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        fs::read(out.join("table.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn negative_radius_is_a_schema_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = shannon\nr = -0.5\n");
    let out = dir.path().join("out");
    let o = groupsample(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`r` must be positive"));
    assert!(!out.exists());
}

#[test]
fn config_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = shannon\nradius = 1\n");
    assert_eq!(groupsample(&["run", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), SMALL_SHANNON);
    assert_eq!(groupsample(&["run", &cfg, "--set", "nodes=abc"]).status.code(), Some(2));
    assert_eq!(groupsample(&["sweep", &cfg, "--param", "s", "--values", "1"]).status.code(), Some(2));
    assert_eq!(groupsample(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(groupsample(&["run", "/nonexistent.cfg"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SHANNON);
    let out = dir.path().join("out");
    // no floating-point estimate meets a relative tolerance of 1e-300
    let o = groupsample(&["run", &cfg, "--set", "tol=1e-300", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL frame_bounds"));
    assert!(out.join("report.json").exists());
}

#[test]
fn sweep_over_r_checks_the_tightness_trend() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SHANNON);
    let out = dir.path().join("sweep");
    let o = groupsample(&["sweep", &cfg, "--param", "r", "--values", "0.5,0.25,0.75", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS trend tightness_nonincreasing"));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(out.join("row002/report.json").exists());
}

#[test]
fn verify_certifies_a_written_point_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SHANNON);
    let out = dir.path().join("out");
    assert_eq!(groupsample(&["run", &cfg, "--output", out.to_str().unwrap()]).status.code(), Some(0));
    let pts = out.join("points.csv");
    let p = pts.to_str().unwrap();
    // on the closed interval the last gap runs to the edge of the region
    assert_eq!(groupsample(&["verify", p, "--dense", "0.55"]).status.code(), Some(1));
    let o = groupsample(&["verify", p, "--sep", "0.5", "--dense", "0.55", "--periodic"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["points"], 32);
    // unit gaps: balls of radius 0.6 around neighbours overlap
    assert_eq!(groupsample(&["verify", p, "--sep", "0.6", "--periodic"]).status.code(), Some(1));
    assert_eq!(groupsample(&["verify", p]).status.code(), Some(2));
}
