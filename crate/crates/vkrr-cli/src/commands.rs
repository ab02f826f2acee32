//! Subcommand implementations. Each returns the process exit code:
//! 0 when every check passes, 1 when a check fails, 2 for configuration or
//! IO problems (mapped by `main`).

use std::fmt::Write as _;
use std::path::Path;

use vkrr_core::analysis::bias_oracle;
use vkrr_core::lowerbound::{
    check_reduction_inequality, kl_monte_carlo, kl_scalar_joints, project_function,
    random_coefficients, random_direction,
};
use vkrr_core::rng::derive_rng;

use rand::Rng;

use crate::config::ExperimentConfig;
use crate::experiment::{
    build_rate_experiment, build_spectral_model, build_target, run_parallel, worker_count,
};
use crate::report::{dataset_csv, write_report_artifacts, write_table_artifacts};
use crate::sobolev::run_sobolev_demo;

/// Slack on the exact bias bound, floating-point only.
const BIAS_SLACK: f64 = 1e-12;

/// Relative tolerance of the Monte Carlo KL cross-check.
const KL_REL_TOL: f64 = 0.05;

pub fn cmd_run_rates(cfg: &ExperimentConfig) -> Result<bool, String> {
    let exp = build_rate_experiment(cfg)?;
    let report = run_parallel(&exp, worker_count())?;
    let mut extra = Vec::new();
    if cfg.persist_data {
        for (n_idx, &n) in exp.ns().iter().enumerate() {
            let data = exp
                .cell_dataset(n_idx, 0)
                .map_err(|e| format!("dataset n = {n}: {e}"))?;
            extra.push((format!("data_n{n}_seed0.csv"), dataset_csv(&data)));
        }
    }
    write_report_artifacts(Path::new(&cfg.output_dir), cfg, &report, &extra)?;
    println!(
        "run-rates {}: slope {:.4} vs theory {:.4} (tolerance {}) -> {}",
        report.config_id,
        report.fitted_slope,
        -report.theory_exponent,
        report.tolerance,
        if report.pass { "pass" } else { "FAIL" }
    );
    Ok(report.pass)
}

pub fn cmd_bias_check(cfg: &ExperimentConfig) -> Result<bool, String> {
    let model = build_spectral_model(cfg)?;
    let target = build_target(cfg, &model)?;
    let mut table = String::from("lambda,bias,bound\n");
    let mut pass = true;
    for &lambda in &cfg.lambda_grid {
        let bias =
            bias_oracle(&target, lambda, cfg.gamma).map_err(|e| format!("bias: {e}"))?;
        let bound = cfg.b_bound * cfg.b_bound * lambda.powf(cfg.beta - cfg.gamma);
        if bias > bound * (1.0 + BIAS_SLACK) {
            pass = false;
        }
        let _ = writeln!(table, "{lambda},{bias},{bound}");
    }
    write_table_artifacts(Path::new(&cfg.output_dir), cfg, "bias_table.csv", &table)?;
    println!(
        "bias-check {}: {} grid points -> {}",
        cfg.config_id,
        cfg.lambda_grid.len(),
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

pub fn cmd_edim(cfg: &ExperimentConfig) -> Result<bool, String> {
    let model = build_spectral_model(cfg)?;
    let mut table = String::from("lambda,n_lambda,product\n");
    for &lambda in &cfg.lambda_grid {
        let n_lambda = model
            .effective_dimension(lambda)
            .map_err(|e| format!("effective dimension: {e}"))?;
        let _ = writeln!(table, "{lambda},{n_lambda},{}", n_lambda * lambda.powf(cfg.p));
    }
    let (d_hat, pass) = model
        .certify_effective_dimension_bound(&cfg.lambda_grid)
        .map_err(|e| format!("certification: {e}"))?;
    write_table_artifacts(Path::new(&cfg.output_dir), cfg, "edim_table.csv", &table)?;
    println!(
        "edim {}: D_hat {:.4} -> {}",
        cfg.config_id,
        d_hat,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

pub fn cmd_lower_bound_demo(cfg: &ExperimentConfig) -> Result<bool, String> {
    let model = build_spectral_model(cfg)?;
    let mut failures = 0usize;
    let gammas = [0.0, 0.3, 1.0];
    let mut rng = derive_rng(cfg.master_seed, &[0x6c62_6464]);
    for trial in 0..cfg.n_trials {
        let f = random_coefficients(&model, cfg.d_y, cfg.master_seed.wrapping_add(trial as u64))
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let a = random_direction(cfg.d_y, cfg.master_seed ^ (trial as u64) << 1)
            .map_err(|e| format!("trial {trial}: {e}"))?
            * (0.1 + 3.0 * rng.random::<f64>());
        let gamma = gammas[trial % gammas.len()];
        let ok = check_reduction_inequality(&f, &a, gamma, &model)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        if !ok {
            failures += 1;
        }
    }
    println!(
        "reduction inequality: {}/{} trials passed",
        cfg.n_trials - failures,
        cfg.n_trials
    );

    // KL table for a projected function pair across noise levels.
    let f_mat = random_coefficients(&model, cfg.d_y, cfg.master_seed.wrapping_add(0xf))
        .map_err(|e| format!("kl pair: {e}"))?;
    let g_mat = random_coefficients(&model, cfg.d_y, cfg.master_seed.wrapping_add(0x10))
        .map_err(|e| format!("kl pair: {e}"))?;
    let a = random_direction(cfg.d_y, cfg.master_seed.wrapping_add(0x11))
        .map_err(|e| format!("kl pair: {e}"))?;
    let f = project_function(&f_mat, &a, &model).map_err(|e| format!("kl pair: {e}"))?;
    let g = project_function(&g_mat, &a, &model).map_err(|e| format!("kl pair: {e}"))?;
    let mut kl_ok = true;
    println!("sigma_bar  kl_exact      kl_mc         rel_err");
    for (idx, &sigma) in [0.5, 1.0, 2.0].iter().enumerate() {
        let exact = kl_scalar_joints(&f, &g, sigma).map_err(|e| format!("kl: {e}"))?;
        let mc = kl_monte_carlo(&f, &g, sigma, cfg.kl_samples, cfg.master_seed + idx as u64)
            .map_err(|e| format!("kl mc: {e}"))?;
        let rel = (mc - exact).abs() / exact;
        if rel > KL_REL_TOL {
            kl_ok = false;
        }
        println!("{sigma:<10} {exact:<13.6} {mc:<13.6} {rel:.4}");
    }
    // Exact inverse-square scaling in the noise level.
    let kl1 = kl_scalar_joints(&f, &g, 1.0).map_err(|e| format!("kl: {e}"))?;
    let kl2 = kl_scalar_joints(&f, &g, 2.0).map_err(|e| format!("kl: {e}"))?;
    let scaling_ok = (kl2 - kl1 / 4.0).abs() <= 1e-12 * kl1;
    let pass = failures == 0 && kl_ok && scaling_ok;
    println!(
        "lower-bound-demo {}: -> {}",
        cfg.config_id,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

pub fn cmd_sobolev_demo(cfg: &ExperimentConfig) -> Result<bool, String> {
    let outcome = run_sobolev_demo(cfg)?;
    write_report_artifacts(Path::new(&cfg.output_dir), cfg, &outcome.report, &[])?;
    println!(
        "sobolev-demo {}: slope {:.4} vs theory {:.4}, p_hat {:.4} (expected {:.4}) -> {}",
        outcome.report.config_id,
        outcome.report.fitted_slope,
        -outcome.report.theory_exponent,
        outcome.p_hat,
        outcome.p_expected,
        if outcome.report.pass { "pass" } else { "FAIL" }
    );
    Ok(outcome.report.pass)
}
