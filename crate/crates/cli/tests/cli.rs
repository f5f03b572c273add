//! End-to-end runs of the binary, including the golden-file scan.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entanglemeter"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn compute_ghz_gme_value() {
    let out = run(&[
        "compute", "--state", "ghz:3", "--measure", "q-gme", "--q", "2",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let row = &rows[0];
    assert!((row["value"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(row["measure"], "q-gme");
    assert_eq!(row["certified"], true);
}

#[test]
fn compute_w_alpha_gme() {
    let out = run(&[
        "compute", "--state", "w:3", "--measure", "alpha-gme", "--alpha", "0.5",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let expect = (2.0f64 / 3.0).sqrt() + (1.0f64 / 3.0).sqrt() - 1.0;
    assert!((rows[0]["value"].as_f64().unwrap() - expect).abs() < 1e-10);
}

#[test]
fn compute_mixed_state_uses_roof() {
    // separable white noise: the estimator must come out near zero
    let out = run(&[
        "compute", "--state", "ghz-noise:2:t=0", "--measure", "q-k-me", "--q", "2", "--k", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(rows[0]["value"].as_f64().unwrap() < 1e-6);
    assert_eq!(rows[0]["certified"], false);
}

#[test]
fn detect_matches_threshold_example() {
    // boundary at (2^4 - 2)/(2^5 - 2) = 14/30: t = 0.5 lies above it
    let out = run(&["detect", "--state", "ghz-noise:4:t=0.5", "--k", "2"]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(rows[0]["ghz_violated"], true);
    assert_eq!(rows[0]["k_nonseparable"], true);

    let out = run(&["detect", "--state", "ghz-noise:4:t=0.4", "--k", "2"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(rows[0]["ghz_violated"], false);
}

#[test]
fn bounds_reports_witness() {
    let out = run(&[
        "bounds", "--state", "w-noise:3:a=1", "--q", "3", "--format", "json",
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(summary["entangled"], true);
    assert!(summary["witness"].as_str().is_some());
    assert!(summary["reports"].as_array().unwrap().len() >= 4);
}

#[test]
fn bounds_white_noise_detects_nothing() {
    let out = run(&[
        "bounds", "--state", "ghz-noise:3:t=0", "--q", "3", "--alpha", "0.5",
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(summary["entangled"], false);
}

#[test]
fn invalid_state_file_fails_with_diagnostic() {
    let out = run(&[
        "compute", "--state", "file:definitely-missing.json", "--measure", "q-gme", "--q", "2",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parse error"), "stderr: {err}");

    // malformed content also fails, with the parser diagnostic
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dims\": [2], \"kind\": \"pure\"").unwrap();
    let out = run(&[
        "compute",
        "--state",
        &format!("file:{}", path.display()),
        "--measure",
        "q-gme",
        "--q",
        "2",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "stderr: {err}");
}

#[test]
fn state_file_round_trip_through_cli() {
    // a state written in the file format evaluates like the factory state
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ghz.json");
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    std::fs::write(
        &path,
        format!(
            "{{\"dims\":[2,2,2],\"kind\":\"pure\",\"data\":[[{amp},0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[{amp},0]]}}"
        ),
    )
    .unwrap();
    let out = run(&[
        "compute",
        "--state",
        &format!("file:{}", path.display()),
        "--measure",
        "q-gme",
        "--q",
        "3",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((rows[0]["value"].as_f64().unwrap() - 0.75).abs() < 1e-10);
}

#[test]
fn scan_reproduces_golden_csv() {
    let out = run(&[
        "scan", "--state", "ghz-noise:4", "--k", "2", "--grid", "t=0:1:0.01", "--format", "csv",
        "--seed", "42",
    ]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/scan_ghz_noise_n4_k2.csv"),
    )
    .unwrap();
    assert_eq!(stdout_str(&out), golden, "scan output drifted from golden file");
}

#[test]
fn scan_row_count_matches_grid() {
    let out = run(&[
        "scan", "--state", "ghz-w-noise:4:b=0.1", "--k", "2", "--grid", "a=0:0.8:0.1",
        "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert_eq!(text.lines().count(), 1 + 9);
    assert!(text.lines().nth(1).unwrap().starts_with("ghz-w-noise,4,2,"));
}

#[test]
fn compare_emits_grid_in_order() {
    let out = run(&[
        "compare", "--grid", "theta=0:1:0.25", "--q", "3", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,q,c_q_gme,gqc,fill");
    assert_eq!(lines.len(), 6);
    let first: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, 0.0);
}

#[test]
fn thread_cap_env_var_is_accepted() {
    let out = bin()
        .env("ENTANGLEMETER_THREADS", "1")
        .args([
            "scan", "--state", "ghz-noise:3", "--k", "2", "--grid", "t=0:1:0.5", "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout_str(&out).lines().count(), 4);
}
