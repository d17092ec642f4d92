use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holocalc"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], files: &[(&str, &Path)]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    for (flag, path) in files {
        cmd.arg(flag).arg(path);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn entry(m: &Value, i: usize, j: usize) -> (f64, f64) {
    (m["re"][i][j].as_f64().unwrap(), m["im"][i][j].as_f64().unwrap())
}

#[test]
fn exp_of_diagonal_matrix() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", r#"{"dim":2,"re":[[0,0],[0,1]]}"#);
    let p = write(&dir, "p.json", r#"{"dim":2,"seminorms":[{"kind":"weighted_sup","weights":[1,3]}]}"#);
    let v = json(&run(&["funcalc", "--f", "exp"], &[("--T", &t), ("--calib", &p)]));
    assert_eq!(v["operation"], "funcalc");
    assert_eq!(v["tolerances"]["tol"], 1e-10);
    let m = &v["matrix"];
    let e = std::f64::consts::E;
    for (i, j, want) in [(0, 0, 1.0), (1, 1, e), (0, 1, 0.0), (1, 0, 0.0)] {
        let (re, im) = entry(m, i, j);
        assert!((re - want).abs() < 1e-10 && im.abs() < 1e-10, "({i},{j}) = {re}+{im}i");
    }
    assert!(v["formulas"]["matrix"].is_string());
}

#[test]
fn nilpotent_radius_is_zero() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "n.json", r#"{"dim":3,"re":[[0,1,0],[0,0,1],[0,0,0]]}"#);
    let v = json(&run(&["radius", "--nmax", "10"], &[("--T", &t)]));
    assert_eq!(v["inf_form"].as_f64(), Some(0.0));
    assert_eq!(v["tolerances"]["nmax"], 10);
}

#[test]
fn verify_projections_passes() {
    let v = json(&run(&["verify", "--suite", "projections", "--seed", "0", "--cases", "4"], &[]));
    assert_eq!(v["pass"], true);
    let maxima = v["maxima"].as_object().unwrap();
    for key in ["idempotency", "sum_to_identity", "disjoint_product", "trace"] {
        let val = maxima[key].as_f64().unwrap();
        assert!(val <= v["thresholds"][key].as_f64().unwrap(), "{key} = {val}");
    }
}

#[test]
fn verify_other_suites_pass() {
    for suite in ["calculus", "radius", "neumann", "renorm", "coincidence"] {
        let v = json(&run(&["verify", "--suite", suite, "--cases", "3"], &[]));
        assert_eq!(v["pass"], true, "{suite}: {v}");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", r#"{"dim":3,"re":[[1,0.5,0],[0,-1,0.2],[0,0,0.5]],"im":[[0,0,0],[0,0,0.3],[0,0,0]]}"#);
    let go = |threads: &str| {
        let mut cmd = bin();
        cmd.env("HOLOCALC_THREADS", threads).args(["classify", "--seed", "3", "--T"]).arg(&t);
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = go("1");
    assert_eq!(a, go("1"));
    assert_eq!(a, go("4"));
}

#[test]
fn out_file_and_csv() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", r#"{"dim":2,"re":[[0.5,1],[0,-0.5]]}"#);
    let out = dir.path().join("r.json");
    let csv = dir.path().join("g.csv");
    let status = bin()
        .args(["resolvent", "--nodes", "9", "--T"])
        .arg(&t)
        .arg("--out")
        .arg(&out)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["grid"]["points"], 81);
    assert_eq!(v["lower_bound_holds"], true);
    let lines = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(lines.lines().count(), 82);
    assert!(lines.starts_with("re,im,norm,dist"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"dim\": 2, \"re\": [[1,");
    assert_eq!(run(&["radius"], &[("--T", &bad)]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["radius"], &[("--T", &missing)]).status.code(), Some(1));

    let t2 = write(&dir, "t2.json", r#"{"dim":2,"re":[[1,0],[0,2]]}"#);
    let p3 = write(&dir, "p3.json", r#"{"dim":3,"seminorms":[{"kind":"weighted_sup","weights":[1,1,1]}]}"#);
    let out = run(&["radius"], &[("--T", &t2), ("--calib", &p3)]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "dimension_mismatch");

    // S does not commute with T
    let s2 = write(&dir, "s2.json", r#"{"dim":2,"re":[[0,0.1],[0,0]]}"#);
    assert_eq!(run(&["perturb", "--f", "exp"], &[("--T", &t2), ("--S", &s2)]).status.code(), Some(2));

    // μ below the spectral radius
    assert_eq!(run(&["renorm", "--mode", "spectral", "--mu", "1.5"], &[("--T", &t2)]).status.code(), Some(2));

    // a pole 1e-7 from a defective eigenvalue defeats the quadrature
    let j = write(&dir, "j.json", r#"{"dim":2,"re":[[1,1],[0,1]]}"#);
    let out = run(&["funcalc", "--f", "rat:1/-1.0000001,1", "--tol", "1e-14"], &[("--T", &j)]);
    assert_eq!(out.status.code(), Some(3));
}
