//! End-to-end tests of the `macamp` binary: exit codes, file outputs,
//! manifests and report determinism.

use std::path::Path;
use std::process::{Command, Output};

fn fig3_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("fig3.json");
    std::fs::write(
        &path,
        r#"{"users":[{"power":2.0},{"power":2.0}],"state_var":1.0,"noise_var":1.0,"state_coupling":1.0}"#,
    )
    .unwrap();
    path
}

fn macamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macamp"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn region2_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let out = dir.path().join("surface.csv");
    let res = macamp(&[
        "region2",
        cfg.to_str().unwrap(),
        "--grid",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "gamma,beta,r1,r2,log2QoverD,tag");
    assert_eq!(lines.count(), 64 * 64 * 4);
    assert!(!csv.contains('\r'));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("surface.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "region2");
    assert_eq!(manifest["parameters"]["grid"], 64);
    assert_eq!(manifest["config"]["powers"][0], 2.0);
}

#[test]
fn region2_rerun_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let res = macamp(&[
            "region2",
            cfg.to_str().unwrap(),
            "--grid",
            "16",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn missing_config_exits_2_naming_path() {
    let res = macamp(&["region2", "/no/such/config.json", "--out", "/tmp/x.csv"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("/no/such/config.json"));
}

#[test]
fn grid_one_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let out = dir.path().join("x.csv");
    let res = macamp(&[
        "region2",
        cfg.to_str().unwrap(),
        "--grid",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("grid must be >= 2"));
}

#[test]
fn xsec_emits_boundary_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let out = dir.path().join("xsec.csv");
    let res = macamp(&[
        "xsec",
        cfg.to_str().unwrap(),
        "--distortion",
        "0.66",
        "--grid",
        "128",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "r1,r2");
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert!(pts.len() >= 3);
    for w in pts.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 > w[0].1);
    }
}

#[test]
fn xsec_infeasible_distortion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let res = macamp(&[
        "xsec",
        cfg.to_str().unwrap(),
        "--distortion",
        "0.01",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("distortion infeasible"));
}

#[test]
fn optimize_rate_only_and_distortion_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());

    let res = macamp(&[
        "optimize",
        cfg.to_str().unwrap(),
        "--mus",
        "1",
        "1",
        "--lambda",
        "0",
    ]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let value = v["report"]["value"].as_f64().unwrap();
    assert!((value - 0.5 * 5.0_f64.log2()).abs() < 1e-9, "value {value}");
    assert_eq!(v["report"]["split"]["gammas"][0], 1.0);
    assert_eq!(v["report"]["split"]["gammas"][1], 1.0);

    let res = macamp(&[
        "optimize",
        cfg.to_str().unwrap(),
        "--mus",
        "1",
        "1",
        "--lambda",
        "2",
        "--oracle-res",
        "65",
    ]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let value = v["report"]["value"].as_f64().unwrap();
    let expect = (10.0 + 4.0 * 2.0_f64.sqrt()).log2();
    assert!((value - expect).abs() < 1e-9, "value {value}");
    assert_eq!(v["report"]["regime"], serde_json::json!("Case2"));
    assert_eq!(v["report"]["split"]["gammas"][0], 0.0);
    assert!((v["oracle_value"].as_f64().unwrap() - expect).abs() < 1e-6);
}

#[test]
fn optimize_all_zero_weights_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let res = macamp(&[
        "optimize",
        cfg.to_str().unwrap(),
        "--mus",
        "0",
        "0",
        "--lambda",
        "0",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("all-zero"));
}

#[test]
fn simulate_small_n_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let res = macamp(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--split",
        "0.5",
        "0.5",
        "--n",
        "10",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains(">= 100"));
}

#[test]
fn simulate_deterministic_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let args = [
        "simulate",
        cfg.to_str().unwrap(),
        "--split",
        "0.5",
        "0.5",
        "--n",
        "10000",
        "--seed",
        "42",
    ];
    let a = macamp(&args);
    let b = macamp(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 42);
    assert!(v["empirical_distortion"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let args = ["verify", cfg.to_str().unwrap(), "--seed", "1"];
    let a = macamp(&args);
    assert!(
        a.status.success(),
        "verify failed: {}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = macamp(&args);
    assert_eq!(a.stdout, b.stdout);
    let checks: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(checks.as_array().unwrap().len() >= 5);
}

#[test]
fn thread_cap_env_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fig3_config(dir.path());
    let out = dir.path().join("t.csv");
    let res = Command::new(env!("CARGO_BIN_EXE_macamp"))
        .env("MACAMP_THREADS", "1")
        .args([
            "region2",
            cfg.to_str().unwrap(),
            "--grid",
            "8",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(res.status.success());
}
