use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BUBBLE: &str = r#"{
  "domain": {"p": 1.0, "t_max": 1.0},
  "forcing": {"terms": [
    {"spatial": {"kind": "poly_bubble", "amplitude": 1.0},
     "temporal": {"kind": "trig", "amplitude": 1.0, "omega": 2.0, "phase": 0.3}},
    {"spatial": {"kind": "sine_mode", "k": 2},
     "temporal": {"kind": "polynomial", "coeffs": [0.5, -1.0]}}
  ]},
  "truncation": {"truncation": {"fixed": 12}},
  "grid": {"nx": 21, "nt": 17},
  "verify": {"lemma_trials": 10}
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parahyp")).args(args).env_remove("PARAHYP_THREADS").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_with(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn solve_is_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "c.json", BUBBLE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_with("solve", &config, &a, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run_with("solve", &config, &b, &["--threads", "3"]).status.code(), Some(0));
    for name in ["fields.csv", "solution_meta.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.join("fields.csv")).unwrap();
    assert!(csv.starts_with("x,t,side,u,u_t,u_tt,u_xx\n"));
    assert_eq!(csv.lines().count(), 1 + 21 * 18);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("solution_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["n_modes"], 12);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_passes_and_detects_corruption() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "c.json", BUBBLE);
    let out = dir.path().join("ok");
    let ok = run_with("verify", &config, &out, &[]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verification_report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["pass"], true);

    let corrupted =
        BUBBLE.replace(r#""lemma_trials": 10"#, r#""lemma_trials": 10, "inject": {"mode": 1, "delta": 1e-3}"#);
    let config = write_config(dir.path(), "bad.json", &corrupted);
    let out = dir.path().join("bad");
    assert_eq!(run_with("verify", &config, &out, &[]).status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verification_report.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["report"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"jump_u_t"), "{failed:?}");
}

#[test]
fn zero_forcing_verifies_with_zero_norms() {
    let dir = TempDir::new().unwrap();
    let config =
        write_config(dir.path(), "z.json", r#"{"domain": {"p": 2.0, "t_max": 0.5}, "grid": {"nx": 9, "nt": 9}}"#);
    let out = dir.path().join("z");
    assert_eq!(run_with("verify", &config, &out, &[]).status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verification_report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["residuals"]["spectral"]["plus"]["linf"], 0.0);
    assert_eq!(report["report"]["boundary_max"], 0.0);
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        "{\n \"domain\": {\"p\": 1.0, \"t_max\": 1.0},\n \"grid\": {\"nx\": 2, \"nt\": true}\n}",
    );
    let out = run_with("solve", &config, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.nt") && err.contains("line 3"), "{err}");

    let missing = run(&["solve", "--config", "/nonexistent/c.json", "--out", "/tmp"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn rejected_forcing_exits_3_listing_violations() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"domain": {"p": 1.0, "t_max": 1.0},
            "forcing": {"terms": [{"spatial": {"kind": "sampled", "values": [1.0, 2.0, 0.0]},
                                   "temporal": {"kind": "polynomial", "coeffs": [1.0]}}]}}"#,
    );
    let out = run_with("solve", &config, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BOUNDARY_NONZERO"));
}

#[test]
fn converge_and_scan_write_tables() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"domain": {"p": 3.141592653589793, "t_max": 3.141592653589793},
            "forcing": {"terms": [{"spatial": {"kind": "poly_bubble", "amplitude": 1.0},
                                   "temporal": {"kind": "polynomial", "coeffs": [1.0]}}]},
            "grid": {"nx": 17, "nt": 9},
            "converge": {"n_list": [2, 4, 8], "reference_n": 32},
            "scan": {"n_max": 10}}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(run_with("converge", &config, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("convergence_summary.json").exists());

    assert_eq!(run_with("scan", &config, &out, &["--seed", "5"]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("degeneracy.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,lambda,value,abs_value");
    assert_eq!(lines.len(), 11);
    for line in &lines[1..] {
        let abs: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((abs - 1.0).abs() <= 1e-12, "{line}");
    }
}

#[test]
fn selftest_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(&["selftest", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("[PASS]").count(), 10);
    assert!(dir.path().join("selftest.json").exists());
}
