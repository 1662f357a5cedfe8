use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stratlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn sobolev_check_on_heisenberg_holds() {
    let out = stratlab(&[
        "check-inequality",
        "--group",
        "heisenberg1",
        "--kind",
        "sobolev",
        "--p",
        "2",
        "--alpha",
        "0",
        "--seed",
        "7",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = report(&out);
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["status"], "ok");
    assert_eq!(rep["config"]["seed"], 7);
    assert_eq!(rep["config"]["group"], "heisenberg1");
    let r = &rep["result"]["reports"][0];
    assert_eq!(r["verdict"], "holds");
    assert!(r["ratio"].as_f64().unwrap() < 1.0);
}

#[test]
fn classical_conditions_flag_the_positivity_condition() {
    let out = stratlab(&[
        "classical-conditions",
        "--n",
        "3",
        "--p",
        "2",
        "--q",
        "2",
        "--r",
        "2",
        "--a",
        "0.5",
        "--b",
        "-1.5",
        "--d",
        "-0.5",
        "--delta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(
        rep["result"]["failed"],
        serde_json::json!(["1/q + b/n > 0"])
    );
}

#[test]
fn hardy_with_p_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"group": "euclidean3", "kind": "hardy", "p": 1.0, "alpha": 0.0}"#,
    )
    .unwrap();
    let out = stratlab(&["check-inequality", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(
        diag["error"]["message"]
            .as_str()
            .unwrap()
            .contains("p must exceed 1"),
        "{diag}"
    );
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"group": "euclidean3", "grid": {"pannels": 3}}"#).unwrap();
    let out = stratlab(&["validate-group", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let run = || {
        let out = stratlab(&[
            "check-inequality",
            "--group",
            "euclidean3",
            "--kind",
            "ckn",
            "--p",
            "2",
            "--q",
            "4",
            "--r",
            "2.6666666666666665",
            "--delta",
            "0.5",
            "--a",
            "0",
            "--b",
            "0.5",
            "--seed",
            "3",
            "--fields",
            "2",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        std::fs::read(&path).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
}

#[test]
fn sharpness_writes_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let out = stratlab(&[
        "sharpness",
        "--group",
        "euclidean2",
        "--kind",
        "sobolev",
        "--p",
        "2",
        "--alpha",
        "0",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,R,R_prime,ratio");
    assert_eq!(lines.len(), 4);
    assert!(report(&out)["result"]["final_ratio"].as_f64().unwrap() >= 0.95);
}

#[test]
fn custom_group_file_is_embedded_in_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("group.json");
    let desc = stratlab::StratifiedGroup::heisenberg(1)
        .unwrap()
        .description()
        .to_json();
    std::fs::write(&path, desc).unwrap();
    let out = stratlab(&["validate-group", "--group", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["result"]["homogeneous_dimension"], 4);
    assert!(rep.get("group_description").is_some());
    assert!(Path::new(rep["config"]["group"].as_str().unwrap()).is_file());
}

#[test]
fn malformed_group_is_a_config_error() {
    let out = stratlab(&["validate-group", "--group", "heisenbergX"]);
    assert_eq!(out.status.code(), Some(2));
}
