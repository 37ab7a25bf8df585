//! Runs the compiled binary and checks exit codes and outputs.

use std::fs;
use std::process::{Command, Output};

fn quasilevy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasilevy"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn show_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = quasilevy(&["show-config", "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 7"));
    let path = dir.path().join("config.toml");
    fs::write(&path, &text).unwrap();
    let again = quasilevy(&["show-config", "--config", path.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[paths]\nalphaa = 3\n").unwrap();
    let out = quasilevy(&["simulate-paths", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alphaa"));
}

#[test]
fn invalid_parameter_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[paths]\nspacings = [-1.0]\n").unwrap();
    let out = quasilevy(&["simulate-paths", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_paths_writes_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(&config, "[paths]\nhorizons = [1.0]\nspacings = [0.5]\nalpha = 2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = quasilevy(&[
        "simulate-paths",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cell = out_dir.join("simulate-paths/T1_h0.5");
    assert!(cell.join("observed.csv").exists());
    assert!(cell.join("quasi_001.csv").exists());
    assert!(out_dir.join("simulate-paths/manifest.json").exists());
}

#[test]
fn check_single_criterion_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = quasilevy(&["check", "--criterion", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS criterion 1"));
    let report = fs::read_to_string(dir.path().join("check/report.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
}

#[test]
fn unknown_criterion_is_rejected() {
    let out = quasilevy(&["check", "--criterion", "42"]);
    assert_eq!(out.status.code(), Some(2));
}
