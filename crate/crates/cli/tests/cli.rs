use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pantilt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pantilt")).args(args).env_remove("PANTILT_OUT_DIR").output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

const STEP: &str = r#"schema_version = 1

[[scenario]]
duration_s = 2.0

[scenario.trajectory]
kind = "step"
offset_deg = 10.0
"#;

#[test]
fn run_writes_trace_and_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(tmp.path(), "s.toml", STEP);
    let out = tmp.path().join("out");
    let o = pantilt(&["run", "--scenario", &file, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out), ["metrics.json", "trace.csv"]);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["trace"]["metrics"]["pwm_jitter_us"].is_number());
    let csv = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 61);
}

#[test]
fn json_format_and_env_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(tmp.path(), "s.toml", STEP);
    let out = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_pantilt"))
        .args(["run", "--scenario", &file, "--format", "json"])
        .env("PANTILT_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(files_in(&out), ["metrics.json", "trace.json"]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 60);
}

#[test]
fn csv_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert!(pantilt(&["run", "--scenario", &scenario("occlusion.toml"), "--out", dir.to_str().unwrap()])
            .status
            .success());
    }
    assert_eq!(std::fs::read(a.join("occlusion.csv")).unwrap(), std::fs::read(b.join("occlusion.csv")).unwrap());
}

#[test]
fn seed_override_changes_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(tmp.path(), "s.toml", STEP);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(pantilt(&["run", "--scenario", &file, "--out", a.to_str().unwrap()]).status.success());
    assert!(pantilt(&["run", "--scenario", &file, "--out", b.to_str().unwrap(), "--seed", "7"]).status.success());
    assert_ne!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(b.join("trace.csv")).unwrap());
}

#[test]
fn malformed_file_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(tmp.path(), "bad.toml", "schema_version = 1\n[[scenario]]\nduration_s = [\n");
    let out = tmp.path().join("out");
    let o = pantilt(&["run", "--scenario", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line "));
    assert!(files_in(&out).is_empty());
}

#[test]
fn invalid_config_exits_3_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let file =
        write(tmp.path(), "bad.toml", &STEP.replace("duration_s = 2.0", "duration_s = 2.0\nframe_rate_hz = -5.0"));
    let out = tmp.path().join("out");
    let o = pantilt(&["run", "--scenario", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(files_in(&out).is_empty());
}

#[test]
fn missing_file_exits_1() {
    assert_eq!(pantilt(&["run", "--scenario", "/nonexistent/x.toml"]).status.code(), Some(1));
}

#[test]
fn compare_reports_positive_eta_for_deadband() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pantilt(&[
        "compare",
        &scenario("step_deadband_off.toml"),
        &scenario("step_deadband_on.toml"),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["eta_percent"].as_f64().unwrap() > 0.0);
    assert!(v["jitter_delta_us"].as_f64().unwrap() < 0.0);
    assert_eq!(files_in(tmp.path()), ["compare.json"]);
}

#[test]
fn compare_of_identical_variants_has_zero_eta() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario("step_deadband_on.toml");
    let o = pantilt(&["compare", &s, &s, "--out", tmp.path().to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["eta_percent"].as_f64(), Some(0.0));
    assert_eq!(v["jitter_delta_us"].as_f64(), Some(0.0));
}

#[test]
fn compare_refuses_different_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pantilt(&[
        "compare",
        &scenario("step_deadband_on.toml"),
        &scenario("accel_fixed_k.toml"),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(files_in(tmp.path()).is_empty());
}

#[test]
fn fusion_check_passes_by_default() {
    let o = pantilt(&["fusion-check"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn perturbed_oracle_exits_4_naming_the_check() {
    let o = pantilt(&["fusion-check", "--perturb-oracle"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cfam_matches_reference"));
}

#[test]
fn non_dividing_heads_exit_3() {
    let o = pantilt(&["fusion-check", "--channels", "2", "--heads", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}
