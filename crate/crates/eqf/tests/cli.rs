//! End-to-end checks of the binary: exit codes, error wording, artifact
//! files, and reproducibility through the process boundary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eqf-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn eqf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqf"))
        .args(args)
        .env_remove("EQF_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("terminated by signal")
}

#[test]
fn short_run_succeeds() {
    let output = eqf(&["run", "--duration", "1", "--seed", "5"]);
    assert_eq!(code(&output), 0, "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("run: 4 landmarks, seed 5"));
    assert!(stdout.contains("landmark 4:"));
}

#[test]
fn missing_config_file_exits_one() {
    let output = eqf(&["run", "--config", "/nonexistent/nowhere.cfg"]);
    assert_eq!(code(&output), 1);
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("configuration error"));
    assert!(stderr.contains("nowhere.cfg"));
}

#[test]
fn unknown_key_is_named_with_line() {
    let dir = scratch_dir("unknown-key");
    let cfg = write_config(&dir, "run.seed = 1\nrun.sede = 2\n");
    let output = eqf(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(stderr.contains("run.sede"), "{stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn negative_dt_override_exits_one() {
    let output = eqf(&["run", "--dt", "-0.5", "--duration", "1"]);
    assert_eq!(code(&output), 1);
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("run.dt"), "{stderr}");
}

#[test]
fn origin_crossing_exits_two_with_step() {
    let dir = scratch_dir("crossing");
    // the single landmark's truth starts at (0, 0.5) and sinks straight
    // toward the origin, crossing it at t = 2 s
    let cfg = write_config(
        &dir,
        "run.duration = 3\n\
         velocity.profile = constant\n\
         velocity.vy = 0.25\n\
         landmarks.count = 1\n\
         landmarks.box = 0 0 1 1\n\
         landmarks.offset = 0 0 -0.5 -0.5\n",
    );
    let output = eqf(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&output), 2, "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("numerical failure"), "{stderr}");
    assert!(stderr.contains("step"), "{stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unknown_flag_exits_sixty_four() {
    let output = eqf(&["run", "--bogus"]);
    assert_eq!(code(&output), 64);
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn help_exits_zero() {
    let output = eqf(&["--help"]);
    assert_eq!(code(&output), 0);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("run"));
}

#[test]
fn selfcheck_prints_every_property() {
    let output = eqf(&["run", "--selfcheck", "--duration", "0.05"]);
    assert_eq!(code(&output), 0, "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    for name in [
        "group axioms",
        "exponential map",
        "action composition",
        "lift compatibility",
        "lift equivariance",
        "dynamics equivariance",
        "action differential inverse",
        "transport re-anchoring",
        "output blocks annihilate radial directions",
        "state Jacobian vs finite differences",
        "output Jacobian vs finite differences",
    ] {
        assert!(stdout.contains(name), "missing property `{name}`");
    }
    assert!(!stdout.contains("FAILED"));
}

#[test]
fn out_dir_receives_artifacts() {
    let dir = scratch_dir("artifacts");
    let out = dir.join("results");
    let output = eqf(&[
        "run",
        "--duration",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--emit-chart",
    ]);
    assert_eq!(code(&output), 0, "{output:?}");
    let csv = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,x_1_1"));
    assert_eq!(csv.lines().count(), 102);
    let snapshot = std::fs::read_to_string(out.join("snapshot.txt")).unwrap();
    assert!(snapshot.contains("# run.seed = 0"));
    let chart = std::fs::read_to_string(out.join("chart.svg")).unwrap();
    assert!(chart.starts_with("<svg"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = scratch_dir("env-out");
    let out = dir.join("from-env");
    let output = Command::new(env!("CARGO_BIN_EXE_eqf"))
        .args(["run", "--duration", "0.5"])
        .env("EQF_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{output:?}");
    assert!(out.join("trace.csv").exists());
    assert!(!out.join("chart.svg").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch_dir("determinism");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let output = eqf(&["run", "--duration", "2", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&output), 0, "{output:?}");
    }
    let a = std::fs::read(out_a.join("trace.csv")).unwrap();
    let b = std::fs::read(out_b.join("trace.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let _ = std::fs::remove_dir_all(&dir);
}
