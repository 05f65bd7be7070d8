//! The command-line binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reinforced-choice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn write_config(dir: &Path, name: &str, extra: Value) -> std::path::PathBuf {
    let mut cfg = json!({
        "schema_version": 1,
        "name": name,
        "graph": {"kind": "linear", "m": 4},
        "mu": [2.0, 0.25, 0.5, 1.0],
        "algorithm": "reinforced",
        "n_steps": 3000,
        "seeds": {"base": 0, "count": 3},
        "record_stride": 500,
    });
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn fixedpoint_on_the_complete_graph() {
    let v = stdout_json(&run(&[
        "analyze", "--kind", "fixedpoint", "--mu", "2,0.25,0.5,1", "--alpha", "0.85",
    ]));
    let x = floats(&v["point"]);
    let expected = [0.98, 0.0, 0.0, 0.019];
    for (a, b) in x.iter().zip(expected) {
        assert!((a - b).abs() < 5e-3, "{x:?}");
    }
}

#[test]
fn stationary_and_eigenbound_outputs() {
    let v = stdout_json(&run(&[
        "analyze", "--kind", "stationary", "--graph", "linear:3", "--mu", "2,1,1", "--alpha", "1",
        "--x", "0.5,0.25,0.25",
    ]));
    assert!(v["local_balance_violation"].as_f64().unwrap() < 1e-15);

    let v = stdout_json(&run(&[
        "analyze", "--kind", "eigenbound", "--p", "0.5,0.5", "--eps", "1", "--mi", "2",
    ]));
    assert_eq!(v["result"]["lambda_min"].as_f64(), Some(0.5));
    assert_eq!(v["result"]["holds"], json!(true));
}

#[test]
fn bad_input_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, r#"{"schema_version": 1, "name": "x"}"#).unwrap();
    let out = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].is_string());

    let out = run(&["analyze", "--kind", "stationary", "--mu", "1,-1", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_repairs_and_violations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    std::fs::write(&ok, json!({"m": 3, "edges": [[1, 2], [2, 3]]}).to_string()).unwrap();
    let out = run(&["validate", "--graph", ok.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "OK");

    let arcs = dir.path().join("arcs.json");
    std::fs::write(&arcs, json!({"m": 2, "edges": [[1, 2]], "directed": true}).to_string()).unwrap();
    let out = run(&["validate", "--graph", arcs.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success());
    assert!(text.contains("repaired: added missing reverse edge 2 -> 1"), "{text}");

    let split = dir.path().join("split.json");
    std::fs::write(&split, json!({"m": 4, "edges": [[1, 2], [3, 4]]}).to_string()).unwrap();
    let out = run(&["validate", "--graph", split.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation: graph is not irreducible"));
}

#[test]
fn run_writes_under_the_override_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "walk", json!({}));
    let out_root = dir.path().join("out");
    let go = || {
        bin()
            .args(["run", "--config", cfg.to_str().unwrap(), "--seed-override", "2"])
            .env("REINFORCED_CHOICE_OUT", &out_root)
            .output()
            .unwrap()
    };
    let first = stdout_json(&go());
    let csv = out_root.join("walk").join("2").join("trajectory.csv");
    let first_csv = std::fs::read_to_string(&csv).unwrap();
    let second = stdout_json(&go());
    assert_eq!(first["median_x"], second["median_x"]);
    assert_eq!(first_csv, std::fs::read_to_string(&csv).unwrap());
    assert!(!out_root.join("walk").join("0").exists());
}

#[test]
fn compare_asserts_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let strict = json!([{"check": "mass_at_least", "threshold": 1.01, "min_seeds": 1}]);
    let a = write_config(dir.path(), "walk", json!({}));
    let b = write_config(dir.path(), "sa", json!({"algorithm": "sa", "acceptance": strict}));
    let out_root = dir.path().join("out");
    let csv_path = dir.path().join("table.csv");
    let compare = |assert: bool| {
        let mut cmd = bin();
        cmd.args(["compare", "--configs", a.to_str().unwrap(), b.to_str().unwrap()])
            .args(["--output", csv_path.to_str().unwrap()])
            .env("REINFORCED_CHOICE_OUT", &out_root);
        if assert {
            cmd.arg("--assert");
        }
        cmd.output().unwrap()
    };
    assert!(compare(false).status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.lines().next().unwrap().contains("sa"));
    assert_eq!(compare(true).status.code(), Some(4));

    let star = write_config(
        dir.path(),
        "star",
        json!({"graph": {"kind": "star", "m": 4, "center": 4}}),
    );
    let out = bin()
        .args(["compare", "--configs", a.to_str().unwrap(), star.to_str().unwrap()])
        .env("REINFORCED_CHOICE_OUT", &out_root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
