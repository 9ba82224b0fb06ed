use std::path::Path;
use std::process::{Command, Output};

fn tgcn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgcn"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "learning_rate = 0.1\n").unwrap();
    let out = tgcn(dir.path(), &["train", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));
}

#[test]
fn bad_usage_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tgcn(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(tgcn(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn ragged_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), "1,2,3\n4,5\n").unwrap();
    std::fs::write(dir.path().join("r.cfg"), "data = s.csv\nsteps_per_day = 1\n").unwrap();
    let out = tgcn(dir.path(), &["build-graph", "--config", "r.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ragged"));
}

#[test]
fn missing_data_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.cfg"), "data = nowhere.csv\n").unwrap();
    assert_eq!(tgcn(dir.path(), &["build-graph", "--config", "m.cfg"]).status.code(), Some(2));
}

#[test]
fn gradcheck_exit_status_tracks_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let ok = tgcn(dir.path(), &["gradcheck"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = tgcn(dir.path(), &["gradcheck", "--corrupt", "bias"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}
