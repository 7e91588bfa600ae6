use std::path::Path;
use std::process::{Command, Output};

fn scl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scl"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_names_every_experiment() {
    let out = scl(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "brascamp-lieb",
        "logsob",
        "borell-sphere",
        "follmer-euclidean",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn logsob_run_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "logsob.json", r#"{"experiment": "logsob"}"#);
    let out_dir = dir.path().join("out");
    let out = scl(&[
        "run",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = std::fs::read_to_string(out_dir.join("logsob.json")).unwrap();
    assert!(json.contains("\"tolerance_multiplier\": 3.0"));
    let csv = std::fs::read_to_string(out_dir.join("logsob.csv")).unwrap();
    assert!(csv.starts_with("name,value,stderr,oracle,tol,relation,pass"));
    assert_eq!(csv.lines().count(), 1 + 24);

    let report = scl(&[
        "report",
        "--in",
        out_dir.join("logsob.json").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(report.status.success());
    assert_eq!(String::from_utf8(report.stdout).unwrap(), csv);
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("steps.json", r#"{"experiment": "girsanov", "steps": 0}"#),
        ("unknown.json", r#"{"experiment": "no-such-thing"}"#),
        ("field.json", r#"{"experiment": "logsob", "colour": 1}"#),
        (
            "param.json",
            r#"{"experiment": "logsob", "params": {"dims": [1]}}"#,
        ),
        ("syntax.json", r#"{"experiment": "#),
    ] {
        let config = write_config(dir.path(), name, body);
        let out = scl(&["run", "--config", &config]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn tampered_reports_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "logsob.json", r#"{"experiment": "logsob"}"#);
    let out = scl(&["run", "--config", &config]);
    assert!(out.status.success());
    let json = String::from_utf8(out.stdout).unwrap();
    let tampered = json.replacen("\"pass\": true", "\"pass\": false", 1);
    let path = write_config(dir.path(), "tampered.json", &tampered);
    assert_ne!(scl(&["report", "--in", &path]).status.code(), Some(0));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "girsanov.json",
        r#"{"experiment": "girsanov", "paths": 2000, "steps": 40, "seed": 5}"#,
    );
    let body = |out: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wallclock_seconds");
        v.to_string()
    };
    let a = body(scl(&["run", "--config", &config]));
    let b = body(scl(&["run", "--config", &config]));
    assert_eq!(a, b);
    let c = body(scl(&["run", "--config", &config, "--seed", "6"]));
    assert_ne!(a, c);
}
