use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn fbnl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbnl"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("FBNL_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constants_match_cotangent_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fbnl(tmp.path(), &["constants", "--s", "0.5", "--gamma", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&tmp.path().join("constants.json"));
    // beta = 2/3, beta cot(pi beta) = -(2/3) / sqrt(3)
    let oracle = -2.0 / (3.0 * 3f64.sqrt());
    assert!((v["A1"].as_f64().unwrap() - oracle).abs() < 1e-8);
    assert!((v["A1"].as_f64().unwrap() + 0.3849).abs() < 1e-4);
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, v);
}

#[test]
fn unknown_command_exits_one_with_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fbnl(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.ini");
    fs::write(&cfg, "[params\ns = 0.5\n").unwrap();
    let out = fbnl(&tmp.path().join("o"), &["constants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = fbnl(&tmp.path().join("o"), &["constants", "--set", "params.s=2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn manifest_lists_every_output_with_checksum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.ini");
    fs::write(&cfg, "[params]\ns = 0.4\ngamma = 0.3\n[constants]\ngamma_sweep = 0, 0.25, 0.5\n").unwrap();
    let dir = tmp.path().join("o");
    let out = fbnl(&dir, &["constants", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let m = json(&dir.join("manifest.json"));
    assert_eq!(m["command"], "constants");
    assert_eq!(m["params"]["s"].as_f64().unwrap(), 0.4);
    let beta = 0.8 / 1.7;
    assert!((m["params"]["beta"].as_f64().unwrap() - beta).abs() < 1e-15);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["constants.json", "constants_sweep.csv"]);
    for e in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(dir.join(e["file"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert!(!e["operation"].as_str().unwrap().is_empty());
    }
    let sweep = fs::read_to_string(dir.join("constants_sweep.csv")).unwrap();
    let mut lines = sweep.lines();
    assert_eq!(lines.next().unwrap(), "gamma,C1s,A1,A2,A,err_A1,err_A2");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    // A1 vanishes at gamma = 0, where the amplitude is undefined
    assert!(first[2].parse::<f64>().unwrap().abs() < 1e-8);
    assert_eq!(first[4], "NaN");
    assert!(!dir.join(".fbnl.lock").exists());
}

#[test]
fn env_var_overrides_out_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("env");
    let out = Command::new(env!("CARGO_BIN_EXE_fbnl"))
        .args(["constants", "--out"])
        .arg(tmp.path().join("flag"))
        .env("FBNL_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("manifest.json").exists());
    assert!(!tmp.path().join("flag").exists());
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join(".fbnl.lock"), "1\n").unwrap();
    let out = fbnl(tmp.path(), &["constants"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["minimize", "--set", "grid.nx=32", "--set", "minimize.bc=ramp", "--threads", "2"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(fbnl(&a, &args).status.success());
    assert!(fbnl(&b, &args).status.success());
    for f in ["field.snapshot", "energy_log.csv", "free_boundary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (ma, mb) = (json(&a.join("manifest.json")), json(&b.join("manifest.json")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
}

#[test]
fn minimizer_snapshot_feeds_the_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m");
    assert!(fbnl(&m, &["minimize", "--set", "grid.nx=64"]).status.success());
    let text = fs::read_to_string(m.join("field.snapshot")).unwrap();
    let field = fbnl_core::grid::Field::from_snapshot(&text).unwrap();
    assert_eq!((field.grid.nx, field.grid.ny), (64, 32));
    assert!(field.values.iter().all(|v| *v >= -1e-12));
    let fb = json(&m.join("free_boundary.json"));
    // half-plane data: the free boundary stays at the origin
    let x0 = fb["fb_points"][0].as_f64().unwrap();
    assert!(x0.abs() <= 2.0 / 64.0, "x0 = {x0}");

    let snap = m.join("field.snapshot");
    let set = format!("input.field={}", snap.display());
    let w = tmp.path().join("w");
    let out = fbnl(&w, &["weiss", "--set", &set, "--set", "sweep.count=6"]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(3));
    let csv = fs::read_to_string(w.join("weiss.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "R,value,forward_diff,defect");
    assert_eq!(csv.lines().count(), 7);
    let d = tmp.path().join("d");
    // growth and density checks are calibrated at 256 cells, so only the plumbing is tested here
    let code = fbnl(&d, &["density", "--set", &set]).status.code();
    assert!(code == Some(0) || code == Some(3));
    let rows: Vec<String> = fs::read_to_string(d.join("density.csv")).unwrap().lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 5);
}

#[test]
fn translate_candidate_has_unit_variation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fbnl(tmp.path(), &["domvar", "--set", "domvar.per_axis=5", "--set", "domvar.epsilon=0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("domvar.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "X1,X2,w,roots,multivalued,gamma_R_over_eps");
    for l in lines {
        let w: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!((w - 1.0).abs() < 1e-8);
    }
}

#[test]
fn solver_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fbnl(tmp.path(), &["linearized", "--set", "grid.nx=32", "--set", "linearized.max_iter=2"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_subset_reports_and_fails_honestly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fbnl(&tmp.path().join("ok"), &["verify-all", "--set", "verify.criteria=1,3,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 3);
    let out = fbnl(&tmp.path().join("bad"), &["verify-all", "--set", "verify.criteria=9"]);
    assert_eq!(out.status.code(), Some(3));
    let m = json(&tmp.path().join("bad/manifest.json"));
    assert_eq!(m["checks"][0]["passed"], false);
}
