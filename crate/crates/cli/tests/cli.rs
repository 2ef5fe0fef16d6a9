use std::path::Path;
use std::process::{Command, Output};

fn zeno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeno")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn table1_csv() {
    let out = zeno(&["table1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,ideal_pp,modified_pp,quantum_jump,bloch,monte_carlo,mc_stderr,observed");
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[5], "16,0.13343,0.10029,0.10215,0.10215,,,0.103");
}

#[test]
fn table2_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t2.json");
    let out = zeno(&["table2", "--format", "json", "--output", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["schema"], "zeno-report/1");
    assert_eq!(report["rows"].as_array().unwrap().len(), 7);
}

#[test]
fn run_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_values": [2, 8], "methods": ["modified_pp", "bloch"]}"#);
    let out = zeno(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("8,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"a3_per_s": -1}"#);
    assert_eq!(zeno(&["run", &bad]).status.code(), Some(2));
    let unknown = write_config(dir.path(), r#"{"mc": {"seed": 1}}"#);
    let out = zeno(&["run", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mc.seed"));
    let crowded = write_config(dir.path(), r#"{"n_values": [107]}"#);
    assert_eq!(zeno(&["run", &crowded]).status.code(), Some(3));
    let missing = dir.path().join("nope.json");
    assert_eq!(zeno(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn check_passes() {
    let out = zeno(&["check"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
