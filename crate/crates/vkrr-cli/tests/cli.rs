//! Black-box tests of the `vkrr` binary: exit codes, diagnostics, artifact
//! layout, and bitwise reproducibility of a full run.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vkrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vkrr"))
        .args(args)
        .output()
        .expect("binary must launch")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// A rate config small enough for a smoke test.
const SMALL_RATES: &str = "config_id = smoke\ni_max = 32\nns = 16,24,32,48\nn_seeds = 3\n";

#[test]
fn run_rates_passes_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RATES);
    let out_dir = tmp.path().join("out");
    let out = vkrr(&[
        "run-rates",
        "--config",
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("run-rates smoke"), "stdout: {stdout}");
    assert!(stdout.contains("pass"), "stdout: {stdout}");
    for name in ["cells.csv", "plot.dat", "summary.txt", "manifest.txt"] {
        assert!(out_dir.join(name).is_file(), "missing artifact {name}");
    }
    let csv = fs::read_to_string(out_dir.join("cells.csv")).unwrap();
    assert!(csv.starts_with("n,seed,error\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed = 0"));
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("config_id = smoke"));
}

#[test]
fn reruns_are_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RATES);
    let mut contents = Vec::new();
    for run in 0..2 {
        let out_dir = tmp.path().join(format!("out{run}"));
        let out = vkrr(&[
            "run-rates",
            "--config",
            &cfg,
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let mut files = Vec::new();
        for name in ["cells.csv", "plot.dat", "summary.txt", "manifest.txt"] {
            files.push(fs::read(out_dir.join(name)).unwrap());
        }
        contents.push(files);
    }
    assert_eq!(contents[0], contents[1]);
}

#[test]
fn persist_data_writes_dataset_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "i_max = 32\nns = 16,24,32,48\nn_seeds = 3\nd_y = 2\npersist_data = true\n",
    );
    let out_dir = tmp.path().join("out");
    let out = vkrr(&[
        "run-rates",
        "--config",
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    // The slope check may fail on this tiny grid; artifacts are written
    // either way.
    assert!(matches!(out.status.code(), Some(0 | 1)));
    for n in [16, 24, 32, 48] {
        let path = out_dir.join(format!("data_n{n}_seed0.csv"));
        let csv = fs::read_to_string(&path).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "x,y1,y2");
        assert_eq!(csv.lines().count(), 1 + n);
    }
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("artifact data_n16_seed0.csv sha256 = "));
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RATES);
    let mut csvs = Vec::new();
    for seed in ["0", "1"] {
        let out_dir = tmp.path().join(format!("seed{seed}"));
        let out = vkrr(&[
            "run-rates",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        csvs.push(fs::read_to_string(out_dir.join("cells.csv")).unwrap());
    }
    assert_ne!(csvs[0], csvs[1]);
}

#[test]
fn failed_check_exits_one() {
    // An absurd theory exponent makes the slope comparison fail while the
    // run itself succeeds.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "i_max = 32\nns = 16,24,32,48\nn_seeds = 3\ntheory_exponent = 5\n",
    );
    let out_dir = tmp.path().join("out");
    let out = vkrr(&[
        "run-rates",
        "--config",
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
    // Artifacts are still written for failed checks.
    assert!(out_dir.join("summary.txt").is_file());
}

#[test]
fn bad_config_exits_two_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "beta = 3\nnot a pair\nbetta = 1\n");
    let out = vkrr(&["run-rates", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
    assert!(stderr.contains("unknown key 'betta'"), "stderr: {stderr}");
    assert!(stderr.contains("(0, 2]"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_exits_two() {
    let out = vkrr(&["run-rates", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/path.cfg"), "stderr: {stderr}");
}

#[test]
fn bias_check_passes_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = vkrr(&["bias-check", "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let table = fs::read_to_string(out_dir.join("bias_table.csv")).unwrap();
    assert!(table.starts_with("lambda,bias,bound\n"));
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn edim_passes_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = vkrr(&["edim", "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out_dir.join("edim_table.csv").is_file());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("pass"), "stdout: {stdout}");
}

#[test]
fn lower_bound_demo_passes_on_small_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "i_max = 32\nn_trials = 100\nkl_samples = 50000\n");
    let out = vkrr(&["lower-bound-demo", "--config", &cfg]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("reduction inequality: 100/100"), "stdout: {stdout}");
    assert!(stdout.contains("kl_exact"), "stdout: {stdout}");
}

#[test]
fn sobolev_demo_rejects_non_matern_kernel() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "kernel = gaussian\n");
    let out = vkrr(&["sobolev-demo", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("matern"), "stderr: {stderr}");
}
