use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holonomy"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(bundled("default.json")).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path
}

#[test]
fn spectrum_rows_step_by_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum"], &bundled("spectrum.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    assert_eq!(lines.next().unwrap(), "n_1,energy");
    let rows: Vec<(i64, f64)> = lines
        .map(|l| {
            let (n, e) = l.split_once(',').unwrap();
            (n.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    for (j, (n, e)) in rows.iter().enumerate() {
        assert_eq!(*n, j as i64 - 2);
        assert!((e - (-2.3 + j as f64)).abs() < 1e-12);
    }
}

#[test]
fn spectrum_and_verify_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (cmd, cfg, file) in [
        ("spectrum", "spectrum.json", "spectrum.csv"),
        ("verify", "default.json", "verify.csv"),
    ] {
        assert_eq!(run(&[cmd], &bundled(cfg), a.path()).status.code(), Some(0));
        assert_eq!(run(&[cmd], &bundled(cfg), b.path()).status.code(), Some(0));
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn verify_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--format", "json"], &bundled("default.json"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn flat_loop_holonomy_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["holonomy"], &bundled("flat_loop.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("holonomy_summary.json")).unwrap()).unwrap();
    assert!(summary["identity_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(summary["loop"], true);
    assert_eq!(summary["steps"], 1000);
}

#[test]
fn quantum_and_classical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["evolve-quantum", "--steps", "200"], &bundled("default.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    for f in ["U1.csv", "U2.csv", "U_full.csv", "evolve_quantum_summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("evolve_quantum_summary.json")).unwrap()).unwrap();
    assert!(summary["factorization_residual"].as_f64().unwrap() < 1e-8);
    let u2 = fs::read_to_string(dir.path().join("U2.csv")).unwrap();
    // 49 × 49 entries plus hash and header lines
    assert_eq!(u2.lines().count(), 49 * 49 + 2);

    let out = run(&["evolve-classical", "--steps", "500"], &bundled("default.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().nth(1).unwrap(), "t,I_1,I_2,phi_1,phi_2");
    assert_eq!(traj.lines().count(), 501 + 2);
    assert!(dir.path().join("transport.csv").exists());
}

#[test]
fn synthesis_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "synth.json", |v| {
        v["synthesis"]["budget"] = 150.into();
        v["synthesis"]["steps"] = 30.into();
    });
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["synthesize", "--seed", "3"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["synthesize", "--seed", "3"], &cfg, &b).status.code(), Some(0));
    let x = fs::read(a.join("synthesis.json")).unwrap();
    assert_eq!(x, fs::read(b.join("synthesis.json")).unwrap());
    let report: Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(report["evaluations"], 150);
    let hist: Vec<f64> = report["history"].as_array().unwrap().iter().map(|h| h.as_f64().unwrap()).collect();
    assert!(hist.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "bad.json", |v| {
        v["system"]["lambda"] = serde_json::json!([0.0]);
    });
    let out = run(&["holonomy"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.lambda"));

    let cfg = edited(dir.path(), "typo.json", |v| {
        v["run"]["stepz"] = 3.into();
    });
    let out = run(&["holonomy"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run"));

    let out = run(&["spectrum"], &dir.path().join("missing.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["holonomy"], &bundled("spectrum.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "div.json", |v| {
        for t in v["connection"]["terms"].as_array_mut().unwrap() {
            t["poly"] = serde_json::json!([{"coeff": 1e200}]);
        }
        v["initial_state"]["actions"] = serde_json::json!([1e200, 1e200]);
    });
    let out = run(&["evolve-classical"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

#[test]
fn failed_check_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "big.json", |v| {
        v["path"]["harmonics"] = serde_json::json!([[[6.0, 0.0]], [[0.0, 6.0]]]);
    });
    let out = run(&["verify"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
