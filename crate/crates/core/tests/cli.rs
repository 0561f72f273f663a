use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zwm-tomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_writes_three_forms_for_four_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"dim": 4, "truth": "hadamard4", "protocol": "compound"}"#);
    let out = bin(&["plan", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let plan = read(&dir.path().join("out/plan.json"));
    assert_eq!(plan["forms"].as_array().unwrap().len(), 3);
    assert_eq!(plan["settings"].as_array().unwrap().len(), 24);
}

#[test]
fn reconstruct_then_verify_hadamard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"dim": 4, "truth": "hadamard4"}"#);
    let out = bin(&["reconstruct", "--config", s(&cfg), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report_path = dir.path().join("out/report.json");
    let report = read(&report_path);
    assert!((report["fidelity_vs_truth"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(fs::read_dir(dir.path().join("out/plots")).unwrap().count(), 24);

    let out = bin(&["verify", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));

    // Flip the sign of one estimated entry.
    let mut tampered = report.clone();
    let entry = &mut tampered["estimate"]["entries"][5];
    entry[0] = Value::from(-entry[0].as_f64().unwrap());
    entry[1] = Value::from(-entry[1].as_f64().unwrap());
    fs::write(&report_path, serde_json::to_string(&tampered).unwrap()).unwrap();
    let out = bin(&["verify", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"dim": 4, "truth": "identity", "phase_grid": {"count": 2}}"#);
    let out = bin(&["plan", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phase_grid.count"));

    let out = bin(&["plan", "--config", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(2));

    let out = bin(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blind_flow_through_pattern_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"dim": 5, "truth": {"haar_seed": 11}, "phase_mode": "relative",
            "noise": {"kind": "none", "phase_offset_mode": "hidden", "master_seed": 3}}"#,
    );
    for cmd in ["simulate", "fit"] {
        let out = bin(&[cmd, "--config", s(&cfg), "--quiet"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let patterns = dir.path().join("out/patterns");
    let sidecar = fs::read_to_string(patterns.join("setting_0000.json")).unwrap();
    assert!(!sidecar.contains("hidden_offset"));
    assert!(dir.path().join("out/fits/setting_0000.json").is_file());

    let blind = dir.path().join("blind");
    let out = bin(&["reconstruct", "--patterns", s(&patterns), "--out", s(&blind), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(&blind.join("report.json"));
    assert!(report["truth"].is_null());
    assert_eq!(report["phase_convention"]["mode"], "absolute");

    // Absolute mode cannot see through the hidden offset; relative mode can.
    let out = bin(&["verify", "--config", s(&cfg), "--report", s(&blind.join("report.json"))]);
    assert_eq!(out.status.code(), Some(1));

    let rel = write_config(
        dir.path(),
        r#"{"dim": 5, "truth": {"haar_seed": 11}, "phase_mode": "relative", "output_dir": "rel"}"#,
    );
    let out = bin(&["reconstruct", "--config", s(&rel), "--patterns", s(&patterns), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin(&["verify", "--config", s(&rel)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"dim": 4, "truth": {"haar_seed": 5}, "noise": {"kind": "poisson", "master_seed": 9}}"#,
    );
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = bin(&["reconstruct", "--config", s(&cfg), "--out", s(&out_dir), "--quiet"]);
        assert_eq!(out.status.code(), Some(0));
        reports.push(fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);

    let out_dir = dir.path().join("c");
    bin(&["reconstruct", "--config", s(&cfg), "--out", s(&out_dir), "--seed", "10", "--quiet"]);
    assert_ne!(fs::read(out_dir.join("report.json")).unwrap(), reports[0]);
}

#[test]
fn gates_lists_library() {
    let out = bin(&["gates", "--dim", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["identity", "hadamard4", "fourier"] {
        assert!(text.contains(name), "{text}");
    }
}
