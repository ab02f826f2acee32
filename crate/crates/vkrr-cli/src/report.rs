//! Artifact emission: per-cell CSV, summary record, gnuplot data file, and
//! the run manifest with config echo and checksums.
//!
//! All numbers are written with Rust's shortest round-trip float formatting
//! and a `.` decimal separator, so identical runs produce bitwise-identical
//! files on any locale.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use vkrr_core::analysis::RateReport;
use vkrr_core::estimator::Dataset;

use crate::config::{canonical_text, ExperimentConfig};

pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| format!("writing {}: {e}", path.display()))?;
    Ok(path)
}

pub fn cells_csv(report: &RateReport) -> String {
    let mut s = String::from("n,seed,error\n");
    for (n_idx, &n) in report.ns.iter().enumerate() {
        for seed in 0..report.errors.ncols() {
            let _ = writeln!(s, "{n},{seed},{}", report.errors[(n_idx, seed)]);
        }
    }
    s
}

pub fn plot_dat(report: &RateReport) -> String {
    let mut s = String::new();
    for (n_idx, &n) in report.ns.iter().enumerate() {
        let _ = writeln!(
            s,
            "{} {}",
            (n as f64).ln(),
            report.median_errors[n_idx].ln()
        );
    }
    s
}

pub fn summary_txt(report: &RateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config_id = {}", report.config_id);
    let _ = writeln!(s, "fitted_slope = {}", report.fitted_slope);
    let _ = writeln!(s, "theory_exponent = {}", report.theory_exponent);
    let _ = writeln!(s, "tolerance = {}", report.tolerance);
    let _ = writeln!(s, "pass = {}", report.pass);
    for (n_idx, &n) in report.ns.iter().enumerate() {
        let _ = writeln!(s, "median_error[{n}] = {}", report.median_errors[n_idx]);
    }
    s
}

/// Dataset as CSV: `x,y1,..,y{d_Y}`, one row per observation.
pub fn dataset_csv(data: &Dataset) -> String {
    let d = data.d_y();
    let mut s = String::from("x");
    for j in 1..=d {
        let _ = write!(s, ",y{j}");
    }
    s.push('\n');
    for t in 0..data.len() {
        let _ = write!(s, "{}", data.x()[t]);
        for j in 0..d {
            let _ = write!(s, ",{}", data.y()[(t, j)]);
        }
        s.push('\n');
    }
    s
}

fn sha256_hex(content: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(content.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Manifest: version, master seed, config echo plus hash, artifact checksums.
pub fn manifest_txt(cfg: &ExperimentConfig, artifacts: &[(&str, &str)]) -> String {
    let echo = canonical_text(cfg);
    let mut s = String::new();
    let _ = writeln!(s, "vkrr_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "master_seed = {}", cfg.master_seed);
    let _ = writeln!(s, "config_sha256 = {}", sha256_hex(&echo));
    for (name, content) in artifacts {
        let _ = writeln!(s, "artifact {name} sha256 = {}", sha256_hex(content));
    }
    let _ = writeln!(s, "--- config ---");
    s.push_str(&echo);
    s
}

/// Writes the full rate-report artifact set under `dir`. `extra` holds
/// additional named artifacts (persisted datasets) included in the manifest.
pub fn write_report_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    report: &RateReport,
    extra: &[(String, String)],
) -> Result<(), String> {
    let csv = cells_csv(report);
    let plot = plot_dat(report);
    let summary = summary_txt(report);
    let mut artifacts = vec![
        ("cells.csv", csv.as_str()),
        ("plot.dat", plot.as_str()),
        ("summary.txt", summary.as_str()),
    ];
    for (name, content) in extra {
        artifacts.push((name.as_str(), content.as_str()));
    }
    let manifest = manifest_txt(cfg, &artifacts);
    write_file(dir, "cells.csv", &csv)?;
    write_file(dir, "plot.dat", &plot)?;
    write_file(dir, "summary.txt", &summary)?;
    for (name, content) in extra {
        write_file(dir, name, content)?;
    }
    write_file(dir, "manifest.txt", &manifest)?;
    Ok(())
}

/// Writes a single named table plus its manifest under `dir`.
pub fn write_table_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    name: &str,
    table: &str,
) -> Result<(), String> {
    let manifest = manifest_txt(cfg, &[(name, table)]);
    write_file(dir, name, table)?;
    write_file(dir, "manifest.txt", &manifest)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sample_report() -> RateReport {
        RateReport {
            config_id: "t".to_string(),
            ns: vec![16, 32],
            errors: DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.125, 0.2]),
            median_errors: vec![0.375, 0.1625],
            fitted_slope: -1.2,
            theory_exponent: 1.0,
            tolerance: 0.12,
            pass: false,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = cells_csv(&sample_report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,seed,error");
        assert_eq!(lines[1], "16,0,0.5");
        assert_eq!(lines[4], "32,1,0.2");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn plot_has_two_columns() {
        let plot = plot_dat(&sample_report());
        for line in plot.lines() {
            assert_eq!(line.split_whitespace().count(), 2);
        }
    }

    #[test]
    fn manifest_checksums_are_stable() {
        let cfg = ExperimentConfig::default();
        let a = manifest_txt(&cfg, &[("cells.csv", "n,seed,error\n")]);
        let b = manifest_txt(&cfg, &[("cells.csv", "n,seed,error\n")]);
        assert_eq!(a, b);
        let c = manifest_txt(&cfg, &[("cells.csv", "different")]);
        assert_ne!(a, c);
    }
}
