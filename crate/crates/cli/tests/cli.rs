use std::path::Path;
use std::process::Command;

use crowdsim::RunConfig;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn crowdsim(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crowdsim"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = crowdsim(&["critical-current", "--epsilon", "0.5", "--out", out]);
    assert_eq!(code, 0);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "completed");
    let files = manifest["files"].as_array().unwrap();
    let mut names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["critical_current.csv", "summary.json"]);
    for f in files {
        let bytes = std::fs::read(dir.path().join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], format!("{:x}", Sha256::digest(&bytes)));
    }
    let summary = read_json(&dir.path().join("summary.json"));
    for k in ["epsilon", "j_c", "bracket_width"] {
        assert!(summary[k].is_number(), "{k}");
    }
}

#[test]
fn echoed_config_reproduces_the_run_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "crowdsim", "exit", "--preset", "example1", "--grid.n", "41", "--t_end", "0.1", "--out",
        out,
    ];
    let cfg = crowdsim::parse_config(args).unwrap();
    let (code, _) = crowdsim(&args[1..]);
    assert_eq!(code, 0);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(RunConfig::from_echo(&manifest["config"]).unwrap(), cfg);
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cfg.json");
    std::fs::write(
        &file,
        r#"{"preset": "example1", "grid.n": 21, "t_end": 0.05, "epsilon": 0.2}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let (code, _) = crowdsim(&[
        "exit",
        "--config",
        file.to_str().unwrap(),
        "--epsilon",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["epsilon"], 0.3);
    assert_eq!(summary["grid_n"], 21);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, err) = crowdsim(&["exit", "--nonsense", "1", "--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("--nonsense"));
    let (code, err) = crowdsim(&["flow", "--bc.left.rho", "influx:-1", "--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("bc.left.rho"));
    assert_eq!(crowdsim(&[]).0, 2);
    assert_eq!(crowdsim(&["radial", "--radial.d", "4", "--out", out]).0, 2);
    assert_eq!(crowdsim(&["--help"]).0, 0);
}

#[test]
fn breakdown_still_writes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = crowdsim(&[
        "flow", "--preset", "example2", "--grid.n", "51", "--out", out,
    ]);
    assert_eq!(code, 4);
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["status"], "breakdown");
    assert!(summary["breakdown"]["value"].as_f64().unwrap() > 1.001);
    assert!(dir.path().join("snapshots.csv").exists());
    assert_eq!(
        read_json(&dir.path().join("manifest.json"))["status"],
        "breakdown"
    );
}

#[test]
fn zero_length_run_has_one_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = crowdsim(&[
        "exit",
        "--preset",
        "example1",
        "--grid.n",
        "11",
        "--t_end",
        "0",
        "--formats",
        "csv",
        "--out",
        out,
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    for (k, row) in rows.iter().enumerate() {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let x = crowdsim_core::Grid1D::unit(11).unwrap().node(k);
        assert_eq!(cols[0], 0.0);
        assert_eq!(cols[1], x);
        assert_eq!(
            cols[2],
            0.9 * (3.0 * std::f64::consts::PI * x).sin().powi(2)
        );
    }
    assert!(!dir.path().join("record.json").exists());
}

#[test]
fn radial_bundle_has_parametric_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = crowdsim(&[
        "radial",
        "--preset",
        "radial-case2",
        "--radial.samples",
        "41",
        "--t_end",
        "0.5",
        "--out",
        out,
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("characteristics.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("r0,t,r,rho"));
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["shock"]["shock_detected"], true);
}
