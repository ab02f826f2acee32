//! Construction of core experiment objects from a parsed configuration,
//! plus the worker pool that evaluates rate-experiment cells in parallel.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use vkrr_core::analysis::{RateExperiment, RateReport, ScheduleParams};
use vkrr_core::kernel::{KernelSpec, MaternOrder};
use vkrr_core::spectral::SpectralModel;
use vkrr_core::synth::{make_target, NoiseKind, NoiseSpec, TargetKind, TargetSpec};

use crate::config::{ExperimentConfig, KernelCfg, NoiseKindCfg, TargetKindCfg};

use std::sync::Arc;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "VKRR_WORKERS";

pub fn build_spectral_model(cfg: &ExperimentConfig) -> Result<Arc<SpectralModel>, String> {
    let model = match &cfg.eigenvalues {
        Some(eigs) => SpectralModel::from_eigenvalues(eigs.clone()),
        None => SpectralModel::from_decay(cfg.i_max, cfg.p),
    };
    model.map(Arc::new).map_err(|e| format!("spectral model: {e}"))
}

pub fn build_target(
    cfg: &ExperimentConfig,
    model: &Arc<SpectralModel>,
) -> Result<TargetSpec, String> {
    let kind = match cfg.target_kind {
        TargetKindCfg::Generic => TargetKind::Generic,
        TargetKindCfg::Boundary => TargetKind::Boundary,
        TargetKindCfg::SingleChannel => TargetKind::SingleChannel,
    };
    make_target(model, cfg.beta, cfg.b_bound, cfg.d_y, kind, cfg.target_seed)
        .map_err(|e| format!("target: {e}"))
}

pub fn build_noise(cfg: &ExperimentConfig) -> Result<NoiseSpec, String> {
    let kind = match cfg.noise_kind {
        NoiseKindCfg::GaussianIso => NoiseKind::GaussianIso,
        NoiseKindCfg::BoundedSphere => NoiseKind::BoundedSphere,
        NoiseKindCfg::RankOne => {
            let mut dir = DVector::zeros(cfg.d_y);
            dir[0] = 1.0;
            NoiseKind::RankOneGaussian { direction: dir }
        }
    };
    NoiseSpec::new(kind, cfg.sigma_bar, cfg.d_y).map_err(|e| format!("noise: {e}"))
}

pub fn build_kernel(
    cfg: &ExperimentConfig,
    model: &Arc<SpectralModel>,
) -> Result<KernelSpec, String> {
    let spec = match cfg.kernel {
        KernelCfg::Designed => Ok(KernelSpec::designed_mercer(model.clone())),
        KernelCfg::Gaussian => KernelSpec::gaussian(cfg.lengthscale),
        KernelCfg::Laplacian => KernelSpec::laplacian(cfg.lengthscale),
        KernelCfg::Matern12 => Ok(KernelSpec::matern(MaternOrder::Half)),
        KernelCfg::Matern32 => Ok(KernelSpec::matern(MaternOrder::ThreeHalves)),
        KernelCfg::Matern52 => Ok(KernelSpec::matern(MaternOrder::FiveHalves)),
    };
    spec.map_err(|e| format!("kernel: {e}"))
}

/// Builds the full rate experiment from a validated config.
pub fn build_rate_experiment(cfg: &ExperimentConfig) -> Result<RateExperiment, String> {
    let model = build_spectral_model(cfg)?;
    let target = build_target(cfg, &model)?;
    let noise = build_noise(cfg)?;
    let kernel = build_kernel(cfg, &model)?;
    let schedule = ScheduleParams::with_constant(
        cfg.p,
        cfg.beta,
        cfg.effective_alpha(),
        cfg.theta,
        cfg.c0,
    )
    .map_err(|e| format!("schedule: {e}"))?;
    let mut exp = RateExperiment::new(
        cfg.config_id.clone(),
        target,
        noise,
        kernel,
        cfg.ns.clone(),
        cfg.n_seeds,
        cfg.gamma,
        schedule,
        cfg.master_seed,
    )
    .map_err(|e| format!("experiment: {e}"))?
    .with_tolerance(cfg.tolerance);
    if let Some(t) = cfg.theory_exponent {
        exp = exp.with_theory_exponent(t);
    }
    Ok(exp)
}

/// Worker count: `VKRR_WORKERS` if set and valid, else available parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Evaluates all cells on `workers` threads and assembles the report.
///
/// Results are deterministic and order-independent: each cell derives its
/// own RNG stream from the master seed.
pub fn run_parallel(exp: &RateExperiment, workers: usize) -> Result<RateReport, String> {
    let cells = exp.cells();
    let n_rows = exp.ns().len();
    let n_cols = exp.n_seeds();
    if workers <= 1 || cells.len() == 1 {
        return exp.run().map_err(|e| format!("experiment: {e}"));
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None::<f64>; cells.len()]);
    let failure = Mutex::new(None::<String>);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(cells.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(n_idx, seed_idx)) = cells.get(idx) else {
                    break;
                };
                match exp.run_cell(n_idx, seed_idx) {
                    Ok(err) => {
                        results.lock().unwrap()[idx] = Some(err);
                    }
                    Err(e) => {
                        let mut f = failure.lock().unwrap();
                        if f.is_none() {
                            *f = Some(format!("cell ({n_idx}, {seed_idx}): {e}"));
                        }
                        break;
                    }
                }
            });
        }
    });
    if let Some(msg) = failure.into_inner().unwrap() {
        return Err(msg);
    }
    let slots = results.into_inner().unwrap();
    let mut errors = DMatrix::zeros(n_rows, n_cols);
    for (idx, &(n_idx, seed_idx)) in cells.iter().enumerate() {
        errors[(n_idx, seed_idx)] =
            slots[idx].ok_or_else(|| format!("cell ({n_idx}, {seed_idx}) not evaluated"))?;
    }
    exp.assemble_report(errors).map_err(|e| format!("report: {e}"))
}
