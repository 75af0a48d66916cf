use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epsflow::DiscreteCurve;

fn epsflow(command: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epsflow"))
        .arg(command)
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_circle_matches_radius_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"command": "simulate", "initial": {"kind": "circle", "radius": 1}, "flow": {"t_max": 0.4, "snapshot_every": 1000}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(epsflow("simulate", &cfg, &out).status.code(), Some(0));
    let result = json(&out.join("result.json"));
    assert_eq!(result["status"], "reached_tmax");
    let length = result["final_diagnostics"]["length"].as_f64().unwrap();
    assert!((length - 2.0 * PI * 0.2f64.sqrt()).abs() < 1e-3);

    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,dt,L,energy,int_k2,q1,q2,q3,q4,max_kappa,turning");
    let mut snaps = 0;
    for entry in std::fs::read_dir(&out).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if name.starts_with("snap_") {
            let c = DiscreteCurve::read_csv(&p).unwrap();
            assert_eq!(c.len(), 256);
            snaps += 1;
        }
    }
    assert!(snaps >= 2);
}

#[test]
fn simulate_reports_singularity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"initial": {"kind": "circle"}, "flow": {"t_max": 1.0, "n_points": 128}}"#);
    let out = dir.path().join("out");
    assert_eq!(epsflow("simulate", &cfg, &out).status.code(), Some(2));
    let result = json(&out.join("result.json"));
    assert_eq!(result["status"], "singularity_kappa");
    assert!(result["final_time"].as_f64().unwrap() < 0.5);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (command, body) in [
        ("simulate", r#"{"initial": {"kind": "file", "path": "missing.csv"}}"#),
        ("verify", r#"{"initial": {"kind": "circle"}, "flow": {"epsilon": -0.1}}"#),
        ("study", r#"{"initial": {"kind": "circle"}, "epsilon_list": [], "sample_times": [0.1]}"#),
        ("simulate", r#"{"initial": {"kind": "circle"}, "flow": {"n_points": 12}}"#),
        ("simulate", "not json"),
    ] {
        let cfg = config(dir.path(), body);
        let o = epsflow(command, &cfg, &out);
        assert_eq!(o.status.code(), Some(1), "{body}");
        assert!(!o.stderr.is_empty());
    }
    let o = Command::new(env!("CARGO_BIN_EXE_epsflow")).arg("bogus").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_on_resolved_circle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"initial": {"kind": "circle"}, "flow": {"n_points": 64, "epsilon": 0.1}}"#);
    let out = dir.path().join("out");
    assert_eq!(epsflow("verify", &cfg, &out).status.code(), Some(0));
    let audit = json(&out.join("audit.json"));
    assert_eq!(audit["passed"], true);
    assert!(audit["audit"]["borsuk_margin_relative"].as_f64().unwrap() >= -1e-6);
    assert_eq!(audit["audit"]["fitted_constants"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_flags_aliased_curve() {
    let dir = tempfile::tempdir().unwrap();
    let aliased = DiscreteCurve::from_fn(16, |x| {
        let r = 1.0 + 0.3 * (7.0 * x).cos() + 0.3 * (8.0 * x).cos();
        [r * x.cos(), r * x.sin()]
    })
    .unwrap();
    aliased.write_csv(dir.path().join("aliased.csv")).unwrap();
    let cfg = config(dir.path(), r#"{"initial": {"kind": "file", "path": "aliased.csv"}}"#);
    let out = dir.path().join("out");
    let o = epsflow("verify", &cfg, &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution_guard"));
    assert_eq!(json(&out.join("audit.json"))["failed"][0], "resolution_guard");
}

#[test]
fn study_on_circle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"command": "study", "initial": {"kind": "circle"}, "epsilon_list": [1e-2, 1e-3, 1e-4], "sample_times": [0.1, 0.25]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(epsflow("study", &cfg, &out).status.code(), Some(0));
    let s = json(&out.join("study.json"));
    for key in ["initial", "epsilons", "times", "d", "d_kappa", "status"] {
        assert!(s.get(key).is_some(), "{key}");
    }
    let d: Vec<Vec<f64>> = serde_json::from_value(s["d"].clone()).unwrap();
    assert!(d[2][1] < 5e-3);
    assert!(d[1][1] / d[0][1] < 0.5);
}

#[test]
fn study_past_extinction_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"initial": {"kind": "circle"}, "flow": {"n_points": 64}, "epsilon_list": [1e-2], "sample_times": [0.6]}"#,
    );
    assert_eq!(epsflow("study", &cfg, &dir.path().join("out")).status.code(), Some(2));
}

#[test]
fn sweep_writes_one_directory_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"initial": {"kind": "ellipse", "a": 2, "b": 1}, "flow": {"n_points": 64, "t_max": 0.05}, "epsilon_list": [0.01, 0.0]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(epsflow("sweep", &cfg, &out).status.code(), Some(0));
    let summary = json(&out.join("sweep.json"));
    assert_eq!(summary.as_array().unwrap().len(), 2);
    for sub in ["eps_0.01", "eps_0"] {
        assert!(out.join(sub).join("result.json").is_file(), "{sub}");
    }
}

#[test]
fn output_dir_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"initial": {"kind": "circle"}, "flow": {"n_points": 32, "t_max": 0.01}, "output_dir": "results"}"#,
    );
    let o = Command::new(env!("CARGO_BIN_EXE_epsflow"))
        .args(["simulate", cfg.to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(dir.path().join("results").join("result.json").is_file());
}
