//! End-to-end runs of the `landscape` binary: artifacts, exit codes and
//! thread-count independence.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SPURIOUS: &str = r#"{
  "command": "spurious",
  "scheme": {"variant": "feed_forward", "input_dim": 1, "output_dim": 1, "widths": [2, 2],
             "activations": [{"name": "leaky_relu", "c": 0.01}, {"name": "leaky_relu", "c": 0.01}]},
  "dataset": {"scalars": [-1.0, -0.4, 0.1, 0.7, 1.3]},
  "seed": 3,
  "options": {"target_gap": 10.0, "growth_samples": 100}
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landscape")).args(args).output().expect("spawn landscape")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn spurious_certificate_round_trips_through_verify() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SPURIOUS);
    let out = dir.path().join("run");
    let res = run(&["spurious", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let cert = out.join("certificate.json");
    assert!(cert.exists());
    let report = read_json(&out.join("spurious.json"));
    assert_eq!(report["pass"], Value::Bool(true));

    let res = run(&["verify", cert.to_str().unwrap(), "--out", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SPURIOUS);
    let out = dir.path().join("run");
    assert_eq!(run(&["spurious", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let original = read_json(&out.join("certificate.json"));

    // Inflated gap.
    let mut gap = original.clone();
    gap["gap"] = Value::from(original["gap"].as_f64().unwrap() + 5.0);
    // Minimizer moved off the critical point.
    let mut moved = original.clone();
    moved["alpha_bar"][0] = Value::from(original["alpha_bar"][0].as_f64().unwrap() + 0.3);

    for (name, cert) in [("gap.json", gap), ("moved.json", moved)] {
        let path = dir.path().join(name);
        std::fs::write(&path, serde_json::to_vec(&cert).unwrap()).unwrap();
        let res = run(&["verify", path.to_str().unwrap(), "--out", dir.path().join("v").to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&res.stdout));
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let body = SPURIOUS.replace("\"growth_samples\"", "\"growth_sample\"");
    let cfg = write_config(dir.path(), "cfg.json", &body);
    let res = run(&["spurious", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn command_mismatch_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SPURIOUS);
    let res = run(&["witness", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"command": "theta",
            "scheme": {"variant": "feed_forward", "input_dim": 1, "output_dim": 1, "widths": [2],
                       "activations": [{"name": "tanh"}]},
            "dataset": {"scalars": [-1.0, 0.0, 0.5, 1.0]},
            "seed": 11,
            "options": {"labels": 8, "starts": 4, "max_iters": 200}}"#,
    );
    let mut reports = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("j{jobs}"));
        let res = run(&["theta", "--config", &cfg, "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0));
        reports.push(std::fs::read(out.join("theta.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn figure1_writes_both_clouds() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"command": "figure1",
            "options": {
              "toy_cloud": {"grid": {"lo": -6.0, "hi": 6.0, "step": 0.05}, "random_points": 5000,
                            "random_lo": -6.0, "random_hi": 6.0},
              "linear_cloud": {"grid": {"lo": -1.0, "hi": 1.0, "step": 0.05}, "random_points": 0,
                               "random_lo": -1.0, "random_hi": 1.0},
              "csv_stride": 2}}"#,
    );
    let out = dir.path().join("fig");
    let res = run(&["figure1", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(matches!(res.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["figure1_toy.csv", "figure1_linear.csv", "figure1.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let header = std::fs::read_to_string(out.join("figure1_toy.csv")).unwrap();
    assert!(header.lines().next().unwrap().starts_with("y1,y2,y3"));
}
