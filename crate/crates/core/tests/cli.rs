use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn diagstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diagstab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn scalar_examples() {
    let dir = tempfile::tempdir().unwrap();
    let stable = write(dir.path(), "s.json", r#"{"A": [[-2]], "B": [[1]]}"#);
    let out = diagstab(&["check", &stable]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "Feasible");

    let unstable = write(dir.path(), "u.json", r#"{"A": [[-1]], "B": [[2]]}"#);
    let out = diagstab(&["check", &unstable]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "Refuted");
    assert_eq!(v["witness_S"], serde_json::json!([[1.0, 1.0], [1.0, 1.0]]));
}

#[test]
fn classify_bidiagonal_family() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "ab1.json",
        r#"{"A": [[-2, 0, 0], [0.5, -3, 0], [0, 0.7, -1.5]], "B": [[0, 0, 0.3], [0, 0, -0.4], [0, 0, 0]]}"#,
    );
    let out = diagstab(&["classify", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tag"]["class"], "ThreeByThree_3AB1");
    assert_eq!(v["stable"], "stable");
    let values = v["condition_values"].as_object().unwrap();
    assert_eq!(values.len(), 3);
    assert_eq!(values["a2a3-|b2c2|"], 4.22);
}

#[test]
fn classify_falls_back_to_check() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.json", r#"{"A": [[-3, 1], [0.5, -2]], "B": [[0.5, 0.2], [-0.3, 0.4]]}"#);
    let out = diagstab(&["classify", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tag"]["class"], "Unstructured");
    assert_eq!(v["check"]["status"], "Feasible");
}

#[test]
fn identical_reports_for_identical_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.json", r#"{"A": [[-3, 1], [0.5, -2]], "B": [[0.5, 0.2], [-0.3, 0.4]]}"#);
    let first = diagstab(&["check", &f, "--seed", "11"]);
    let second = diagstab(&["check", &f, "--seed", "11"]);
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn transform_maps_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "t.json",
        r#"{"A": [[-3, 1], [0.5, -2]], "B": [[0.5, 0.2], [-0.3, 0.4]], "D": [2, -1], "E": [1, 0.5]}"#,
    );
    let out = diagstab(&["transform", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["A"], serde_json::json!([[-12.0, -2.0], [-1.0, -2.0]]));
    assert!(v["mapped_certificate"]["margin"].as_f64().unwrap() > 0.0);

    let missing = write(dir.path(), "m.json", r#"{"A": [[-2]], "B": [[1]]}"#);
    assert_eq!(diagstab(&["transform", &missing]).status.code(), Some(1));
}

#[test]
fn simulate_writes_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"A": [[-2]], "B": [[1]], "tau": [1]}"#);
    let csv = dir.path().join("traj.csv");
    let out = diagstab(&["simulate", &f, "--format", "csv", "--horizon", "2", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,t,x_1,V"));
    // 100 history rows, then t = 0 .. 2
    assert_eq!(lines.count(), 100 + 201);

    let out = diagstab(&["simulate", &f, "--tau", "0,0.5"]);
    let v = json(&out);
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r["decay"]["decayed"] == true));
}

#[test]
fn refute_reports_nothing_for_stable_pair() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"A": [[-2]], "B": [[1]]}"#);
    let out = diagstab(&["refute", &f, "--samples", "16"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["witness"].is_null());
}

#[test]
fn input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"A": [[-1, 0], [0, -1]], "B": [[1]]}"#,
        r#"{"A": [[-1, 0], [0]], "B": [[1]]}"#,
        r#"{"A": [[-1]], "B": [[1]], "extra": 3}"#,
        "[[1]]",
    ];
    for (k, body) in cases.iter().enumerate() {
        let f = write(dir.path(), &format!("bad{k}.json"), body);
        let out = diagstab(&["check", &f]);
        assert_eq!(out.status.code(), Some(1), "case {k}");
        assert!(!out.stderr.is_empty());
    }
    let good = write(dir.path(), "good.json", r#"{"A": [[-2]], "B": [[1]]}"#);
    assert_eq!(diagstab(&["check", &good, "--frobnicate"]).status.code(), Some(1));
    assert_eq!(diagstab(&["launch", &good]).status.code(), Some(1));
    assert_eq!(diagstab(&["check", "/nonexistent/problem.json"]).status.code(), Some(1));
}
