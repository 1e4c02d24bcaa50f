//! Exit codes, configuration handling and output files of the binary.

use std::path::Path;
use std::process::{Command, Output};

fn kinetic(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinetic"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn passing_suite_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["verify-group"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("experiment,parameters,measured,target,tolerance,pass\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["all_pass"], true);
}

#[test]
fn malformed_config_exits_two_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "# comment\ngrid = 16\nlambda = 1, two\n").unwrap();
    let o = kinetic(&["balance", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn unknown_subcommand_and_bad_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert_ne!(kinetic(&["bogus"], dir.path()).status.code(), Some(0));
    assert_eq!(kinetic(&["besov", "--p", "x"], dir.path()).status.code(), Some(2));
    // outside the admissible exponent range
    assert_eq!(kinetic(&["sobolev", "--p", "1.1"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_values_reach_the_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "grid = 16\np = 3\nlambda = 1/2, 1, 2\n").unwrap();
    let o = kinetic(&["sobolev", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.contains("p=3") && csv.contains("grid=16"), "{csv}");
    // flags override the file
    let o = kinetic(&["sobolev", "--config", cfg.to_str().unwrap(), "--p", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.contains("p=2,"), "{csv}");
}

#[test]
fn balance_and_scaling_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(kinetic(&["balance"], dir.path()).status.code(), Some(0));
    assert_eq!(kinetic(&["scaling", "--grid", "24"], dir.path()).status.code(), Some(0));
}
