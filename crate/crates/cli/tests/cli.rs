use std::path::Path;
use std::process::{Command, Output};

fn grec_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grec-lab")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = grec_lab(&["oracle", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[lambda_grid]\ncount = 26\nstep = 0.1\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = grec_lab(&["oracle", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
    assert!(!out_dir.exists());

    let out = grec_lab(&["oracle", "--config", p(&dir.path().join("missing.toml"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    // A probe past the end of the extrapolation range.
    std::fs::write(&cfg, "[stability]\nrho = 2.0\nprobes = [1.3]\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = grec_lab(&["stability", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
}

#[test]
fn seed_and_shots_flags_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = grec_lab(&["simulate", "--seed", "9", "--shots", "300", "--format", "json", "--out", p(&out_dir)]);
    assert!(out.status.success());
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 9"));
    assert!(manifest.contains("\"shots\": 300"));
    assert!(manifest.contains("\"format\": \"json\""));
    let noisy = std::fs::read_to_string(out_dir.join("noisy.json")).unwrap();
    assert!(noisy.contains("\"stderrs\": ["));
}

#[test]
fn report_after_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(grec_lab(&["run", "--out", p(&run)]).status.success());
    let out = grec_lab(&["report", "--out", p(&run)]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(run.join("grec.svg")).unwrap();
    assert!(svg.contains("trained on T1") && svg.contains("trained on T2"));
    for f in ["baseline.svg", "zne.svg", "randomized.svg"] {
        assert!(run.join(f).exists(), "{f}");
    }
}

#[test]
fn report_without_curves_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = grec_lab(&["report", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
