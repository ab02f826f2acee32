//! Sobolev-smoothness demo with Matérn kernels.
//!
//! The target is a finite kernel expansion `F_*(x) = Σ_k c_k k_ν(x, z_k)`
//! over dense equispaced nodes, so it lies in the Matérn RKHS (a Sobolev
//! space of order `m = ν + 1/2` in one dimension) and the theory predicts
//! the rate exponent `s/(s + d/2)` with `s = m`, `d = 1`. The spectrum is
//! black-box here: errors use Monte Carlo `L₂` and the eigenvalue decay is
//! estimated with the Nyström method.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use vkrr_core::analysis::{fit_rate, lambda_schedule, RateReport, ScheduleParams};
use vkrr_core::estimator::{fit, Dataset};
use vkrr_core::kernel::{KernelSpec, MaternOrder};
use vkrr_core::rng::derive_rng;
use vkrr_core::spectral::{default_decay_fit_range, estimate_decay, nystrom_spectrum};
use vkrr_core::median;

use crate::config::{ExperimentConfig, KernelCfg};

/// Tolerance on the Nyström decay estimate around `p = 1/(2m)`.
const P_HAT_TOLERANCE: f64 = 0.15;

pub struct SobolevOutcome {
    pub report: RateReport,
    pub p_hat: f64,
    pub p_expected: f64,
    pub p_hat_ok: bool,
}

fn matern_order(cfg: &ExperimentConfig) -> Result<MaternOrder, String> {
    match cfg.kernel {
        KernelCfg::Matern12 => Ok(MaternOrder::Half),
        KernelCfg::Matern32 => Ok(MaternOrder::ThreeHalves),
        KernelCfg::Matern52 => Ok(MaternOrder::FiveHalves),
        _ => Err("sobolev-demo requires kernel = matern12, matern32, or matern52".to_string()),
    }
}

/// The demo target: node locations and per-channel expansion coefficients.
struct KernelExpansion {
    kernel: KernelSpec,
    nodes: Vec<f64>,
    coeffs: DMatrix<f64>,
}

impl KernelExpansion {
    fn eval(&self, x: f64) -> vkrr_core::Result<DVector<f64>> {
        let k = self.kernel.cross_vector(&self.nodes, x)?;
        Ok(self.coeffs.transpose() * k)
    }
}

fn build_expansion(
    cfg: &ExperimentConfig,
    kernel: &KernelSpec,
) -> Result<KernelExpansion, String> {
    let n_nodes = cfg.n_nodes;
    let nodes: Vec<f64> = (0..n_nodes)
        .map(|k| (k as f64 + 0.5) / n_nodes as f64)
        .collect();
    let mut rng = derive_rng(cfg.target_seed, &[0x736f_626f]);
    let mut coeffs = DMatrix::from_fn(n_nodes, cfg.d_y, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });
    let expansion = KernelExpansion {
        kernel: kernel.clone(),
        nodes,
        coeffs: coeffs.clone(),
    };
    // Normalize each channel to unit L2(π) norm (estimated on a fine grid)
    // so error magnitudes are comparable across configurations.
    let grid = 2048;
    let mut norms = vec![0.0f64; cfg.d_y];
    for g in 0..grid {
        let x = (g as f64 + 0.5) / grid as f64;
        let v = expansion.eval(x).map_err(|e| format!("target: {e}"))?;
        for j in 0..cfg.d_y {
            norms[j] += v[j] * v[j] / grid as f64;
        }
    }
    for (j, &nsq) in norms.iter().enumerate() {
        if nsq > 0.0 {
            let scale = 1.0 / nsq.sqrt();
            coeffs.column_mut(j).scale_mut(scale);
        }
    }
    Ok(KernelExpansion {
        kernel: kernel.clone(),
        nodes: expansion.nodes,
        coeffs,
    })
}

/// Runs the full demo: rate slope via Monte Carlo `L₂` errors under the
/// Sobolev schedule, plus the Nyström decay estimate.
pub fn run_sobolev_demo(cfg: &ExperimentConfig) -> Result<SobolevOutcome, String> {
    let order = matern_order(cfg)?;
    let kernel = KernelSpec::matern(order);
    let m = order.nu() + 0.5;
    let p = 1.0 / (2.0 * m);
    let theory_exponent = m / (m + 0.5);
    let schedule = ScheduleParams::with_constant(p, 1.0, p, cfg.theta, cfg.c0)
        .map_err(|e| format!("schedule: {e}"))?;
    let target = build_expansion(cfg, &kernel)?;

    let mut errors = DMatrix::zeros(cfg.ns.len(), cfg.n_seeds);
    for (n_idx, &n) in cfg.ns.iter().enumerate() {
        let lambda = lambda_schedule(n, &schedule).map_err(|e| format!("schedule: {e}"))?;
        for seed_idx in 0..cfg.n_seeds {
            let mut stream = derive_rng(
                cfg.master_seed,
                &[0x736f_6263, n as u64, seed_idx as u64],
            );
            let data_seed = stream.next_u64();
            let mc_seed = stream.next_u64();
            let data = sample_from_expansion(cfg, &target, n, data_seed)?;
            let fitted = fit(&kernel, &data, lambda).map_err(|e| format!("fit: {e}"))?;
            let err = vkrr_core::analysis::monte_carlo_l2_error_fn(
                |x| fitted.predict(x),
                |x| target.eval(x),
                cfg.n_test,
                mc_seed,
            )
            .map_err(|e| format!("monte carlo: {e}"))?;
            errors[(n_idx, seed_idx)] = err;
        }
    }
    let medians: Vec<f64> = (0..cfg.ns.len())
        .map(|i| {
            let row: Vec<f64> = errors.row(i).iter().copied().collect();
            median(&row)
        })
        .collect();
    let fitted_slope = fit_rate(&cfg.ns, &medians).map_err(|e| format!("slope: {e}"))?;
    let slope_ok = (fitted_slope + theory_exponent).abs() <= cfg.tolerance;

    let (p_hat, p_hat_ok) = nystrom_decay(cfg, &kernel, p)?;

    let report = RateReport {
        config_id: cfg.config_id.clone(),
        ns: cfg.ns.clone(),
        errors,
        median_errors: medians,
        fitted_slope,
        theory_exponent,
        tolerance: cfg.tolerance,
        pass: slope_ok && p_hat_ok,
    };
    Ok(SobolevOutcome {
        report,
        p_hat,
        p_expected: p,
        p_hat_ok,
    })
}

fn sample_from_expansion(
    cfg: &ExperimentConfig,
    target: &KernelExpansion,
    n: usize,
    seed: u64,
) -> Result<Dataset, String> {
    let mut rng = derive_rng(seed, &[0x736f_6264]);
    let mut xs = Vec::with_capacity(n);
    let mut y = DMatrix::zeros(n, cfg.d_y);
    let channel_sd = cfg.sigma_bar / (cfg.d_y as f64).sqrt();
    for t in 0..n {
        let x: f64 = rng.random();
        let f = target.eval(x).map_err(|e| format!("target: {e}"))?;
        for j in 0..cfg.d_y {
            y[(t, j)] = f[j] + channel_sd * rng.sample::<f64, _>(StandardNormal);
        }
        xs.push(x);
    }
    Dataset::new(xs, y).map_err(|e| format!("dataset: {e}"))
}

fn nystrom_decay(
    cfg: &ExperimentConfig,
    kernel: &KernelSpec,
    p_expected: f64,
) -> Result<(f64, bool), String> {
    let m = cfg.nystrom_m;
    let mut rng = derive_rng(cfg.master_seed, &[0x6e79_7374]);
    let sample: Vec<f64> = (0..m).map(|_| rng.random()).collect();
    let spectrum = nystrom_spectrum(kernel, &sample).map_err(|e| format!("nystrom: {e}"))?;
    let mu_hat: Vec<f64> = spectrum.iter().copied().collect();
    let p_hat = estimate_decay(&mu_hat, default_decay_fit_range(m))
        .map_err(|e| format!("decay fit: {e}"))?;
    Ok((p_hat, (p_hat - p_expected).abs() <= P_HAT_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn expansion_channels_normalized() {
        let cfg = parse_config("kernel = matern12\nn_nodes = 16\nd_y = 2\n").unwrap();
        let kernel = KernelSpec::matern(MaternOrder::Half);
        let target = build_expansion(&cfg, &kernel).unwrap();
        let grid = 2048;
        let mut norms = [0.0f64; 2];
        for g in 0..grid {
            let x = (g as f64 + 0.5) / grid as f64;
            let v = target.eval(x).unwrap();
            norms[0] += v[0] * v[0] / grid as f64;
            norms[1] += v[1] * v[1] / grid as f64;
        }
        assert!((norms[0] - 1.0).abs() < 1e-6);
        assert!((norms[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn requires_matern_kernel() {
        let cfg = parse_config("kernel = gaussian\n").unwrap();
        assert!(run_sobolev_demo(&cfg).is_err());
    }

    #[test]
    fn nystrom_p_hat_near_half_for_matern12() {
        let cfg = parse_config("kernel = matern12\nnystrom_m = 512\n").unwrap();
        let kernel = KernelSpec::matern(MaternOrder::Half);
        let (p_hat, ok) = nystrom_decay(&cfg, &kernel, 0.5).unwrap();
        assert!(ok, "p_hat = {p_hat}");
    }
}
