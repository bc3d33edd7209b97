use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs")).join(name)
}

fn zpc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zpc"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn run_dirs(root: &Path) -> Vec<PathBuf> {
    std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect()
}

#[test]
fn compare_writes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark_low_noise.json");
    let out = zpc(
        &["compare", "-c", cfg.to_str().unwrap(), "--steps", "5"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("zpc: 5 steps"));
    let runs = run_dirs(dir.path());
    assert_eq!(runs.len(), 1);
    assert!(runs[0].join("comparison.csv").is_file());
}

#[test]
fn infeasible_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark_high_noise.json");
    let out = zpc(
        &[
            "zpc",
            "-c",
            cfg.to_str().unwrap(),
            "--horizon",
            "6",
            "--steps",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn reach_prints_one_line_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark_low_noise.json");
    let out = zpc(&["reach", "-c", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let steps = String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| l.starts_with("step "))
        .count();
    assert_eq!(steps, 4);
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = zpc(&["collect", "-c", "does/not/exist.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn invalid_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark_low_noise.json");
    let out = zpc(
        &["collect", "-c", cfg.to_str().unwrap(), "--data-count", "0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_get_separate_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark_noise_free.json");
    for _ in 0..2 {
        let out = zpc(
            &["mpc", "-c", cfg.to_str().unwrap(), "--steps", "3"],
            dir.path(),
        );
        assert!(out.status.success());
    }
    assert_eq!(run_dirs(dir.path()).len(), 2);
}
