//! Exact γ-norm error evaluation of fitted models, the closed-form bias
//! oracle, λ schedules, and learning-rate slope fitting.
//!
//! The central object is [`RateExperiment`]: a grid of (sample size, seed)
//! cells, each producing one squared γ-norm error. Cells are independent and
//! deterministic given the master seed, so callers may evaluate them from a
//! worker pool and assemble the report afterwards.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use crate::estimator::{fit, Dataset, FittedModel};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::rng::derive_rng;
use crate::spectral::{CoefficientMatrix, SpectralModel};
use crate::synth::{eval_target, sample_dataset, NoiseSpec, TargetSpec};
use crate::util::{median, ols_slope};
use crate::{Error, Result};

/// Fresh test points for the Monte Carlo error path (black-box kernels).
const MC_TEST_POINTS: usize = 10_000;

/// Default slope tolerance for well-specified configurations.
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.12;

/// Slope tolerance for misspecified, γ > 0, and Matérn configurations,
/// where finite-sample transients are larger.
pub const RELAXED_SLOPE_TOLERANCE: f64 = 0.15;

/// Embeds a fitted designed-Mercer model into `L₂`-basis coefficients.
///
/// Uses `∫ k(x_t, x) e_i(x) dπ(x) = μ_i e_i(x_t)`, so
/// `ĉ_ij = μ_i·Σ_t e_i(x_t)·W_tj` with no quadrature error.
pub fn embed_coefficients(
    model: &FittedModel,
    spec: &SpectralModel,
) -> Result<CoefficientMatrix> {
    match model.kernel().family() {
        KernelFamily::DesignedMercer(m) if m.as_ref() == spec => {}
        _ => return Err(Error::NotDesignedKernel),
    }
    let basis = spec.basis_matrix(model.train_x());
    let mut c = basis.transpose() * model.weights();
    for i in 0..spec.i_max() {
        let mu = spec.eigenvalues()[i];
        c.row_mut(i).scale_mut(mu);
    }
    CoefficientMatrix::new(c)
}

/// Exact squared γ-norm error `Σ_{i,j} (ĉ_ij − c*_ij)² μ_i^{−γ}` within the
/// truncated model. Requires `γ ∈ [0, 1]` and `γ < β`.
pub fn gamma_error(chat: &CoefficientMatrix, target: &TargetSpec, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) || gamma >= target.beta() {
        return Err(Error::invalid("gamma", "requires 0 <= gamma <= 1 and gamma < beta"));
    }
    let model = target.model();
    let cstar = target.coefficients();
    if chat.i_max() != model.i_max() {
        return Err(Error::DimensionMismatch {
            expected: model.i_max(),
            got: chat.i_max(),
        });
    }
    if chat.d_y() != cstar.d_y() {
        return Err(Error::DimensionMismatch {
            expected: cstar.d_y(),
            got: chat.d_y(),
        });
    }
    let mut sum = 0.0;
    for i in 0..model.i_max() {
        let w = libm::pow(model.eigenvalues()[i], -gamma);
        for j in 0..cstar.d_y() {
            let d = chat.entries()[(i, j)] - cstar.entries()[(i, j)];
            sum += d * d * w;
        }
    }
    Ok(sum)
}

/// Exact squared γ-norm bias `‖[F_λ] − F_*‖²_γ` of the infinite-data
/// regularized solution: `Σ_{i,j} c*_ij² (λ/(λ+μ_i))² μ_i^{−γ}`.
pub fn bias_oracle(target: &TargetSpec, lambda: f64, gamma: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    if !(gamma >= 0.0 && gamma <= target.beta()) {
        return Err(Error::invalid("gamma", "must lie in [0, beta]"));
    }
    let model = target.model();
    let c = target.coefficients();
    let mut sum = 0.0;
    for i in 0..model.i_max() {
        let mu = model.eigenvalues()[i];
        let shrink = lambda / (lambda + mu);
        let w = shrink * shrink * libm::pow(mu, -gamma);
        for j in 0..c.d_y() {
            let v = c.entries()[(i, j)];
            sum += v * v * w;
        }
    }
    Ok(sum)
}

/// Parameters of the theoretical regularization schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub p: f64,
    pub beta: f64,
    pub alpha: f64,
    pub theta: f64,
    pub c0: f64,
}

impl ScheduleParams {
    pub fn new(p: f64, beta: f64, alpha: f64, theta: f64) -> Result<Self> {
        Self::with_constant(p, beta, alpha, theta, 1.0)
    }

    pub fn with_constant(p: f64, beta: f64, alpha: f64, theta: f64, c0: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("p", "must lie in (0, 1]"));
        }
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::invalid("beta", "must lie in (0, 2]"));
        }
        if !(alpha >= p && alpha <= 1.0) {
            return Err(Error::invalid("alpha", "must lie in [p, 1]"));
        }
        if !(theta > 1.0) {
            return Err(Error::invalid("theta", "must exceed 1"));
        }
        if !(c0 > 0.0) {
            return Err(Error::invalid("c0", "must be positive"));
        }
        Ok(Self { p, beta, alpha, theta, c0 })
    }
}

/// `λ_n = c₀·n^{−1/(β+p)}` when `β+p > α`, otherwise the log-corrected
/// `c₀·(n/log^θ n)^{−1/α}`. The tie `β+p = α` takes the log branch.
pub fn lambda_schedule(n: usize, params: &ScheduleParams) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "must be at least 2"));
    }
    let nf = n as f64;
    let lambda = if params.beta + params.p > params.alpha {
        params.c0 * libm::pow(nf, -1.0 / (params.beta + params.p))
    } else {
        let effective = nf / libm::pow(libm::log(nf), params.theta);
        params.c0 * libm::pow(effective, -1.0 / params.alpha)
    };
    Ok(lambda)
}

/// Ordinary-least-squares slope of `log(median_error)` against `log(n)`.
pub fn fit_rate(ns: &[usize], median_errors: &[f64]) -> Result<f64> {
    if ns.len() < 4 {
        return Err(Error::invalid("ns", "needs at least 4 sample sizes"));
    }
    if ns.len() != median_errors.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: median_errors.len(),
        });
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("ns", "must be strictly increasing"));
    }
    if median_errors.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("median_errors", "must be strictly positive"));
    }
    let log_n: Vec<f64> = ns.iter().map(|&n| libm::log(n as f64)).collect();
    let log_e: Vec<f64> = median_errors.iter().map(|&e| libm::log(e)).collect();
    Ok(ols_slope(&log_n, &log_e))
}

/// Mean squared prediction error `(1/n_test)·Σ‖F̂(x) − F_*(x)‖²` over fresh
/// uniform test points. If the model was fitted through an output factor the
/// comparison targets `B^{1/2}F_*`.
pub fn monte_carlo_l2_error(
    model: &FittedModel,
    target: &TargetSpec,
    n_test: usize,
    seed: u64,
) -> Result<f64> {
    let factor = model.output_factor().cloned();
    monte_carlo_l2_error_fn(
        |x| model.predict(x),
        |x| {
            let f = eval_target(target, x)?;
            match &factor {
                Some(b) => b.apply_sqrt(&f),
                None => Ok(f),
            }
        },
        n_test,
        seed,
    )
}

/// Monte Carlo squared `L₂` distance between two functions on `[0,1]`.
pub fn monte_carlo_l2_error_fn(
    predict: impl Fn(f64) -> Result<DVector<f64>>,
    truth: impl Fn(f64) -> Result<DVector<f64>>,
    n_test: usize,
    seed: u64,
) -> Result<f64> {
    if n_test == 0 {
        return Err(Error::invalid("n_test", "must be at least 1"));
    }
    let mut rng = derive_rng(seed, &[0x6d63_6c32]);
    let mut sum = 0.0;
    for _ in 0..n_test {
        let x: f64 = rng.random();
        let diff = predict(x)? - truth(x)?;
        sum += diff.norm_squared();
    }
    Ok(sum / n_test as f64)
}

/// Per-(n, seed) learning-rate experiment over a fixed target and noise model.
#[derive(Debug, Clone)]
pub struct RateExperiment {
    config_id: String,
    target: TargetSpec,
    noise: NoiseSpec,
    kernel: KernelSpec,
    ns: Vec<usize>,
    n_seeds: usize,
    gamma: f64,
    schedule: ScheduleParams,
    master_seed: u64,
    tolerance: f64,
    fixed_lambda: Option<f64>,
    theory_exponent: f64,
}

impl RateExperiment {
    pub fn new(
        config_id: String,
        target: TargetSpec,
        noise: NoiseSpec,
        kernel: KernelSpec,
        ns: Vec<usize>,
        n_seeds: usize,
        gamma: f64,
        schedule: ScheduleParams,
        master_seed: u64,
    ) -> Result<Self> {
        if ns.len() < 4 || ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "ns",
                "needs at least 4 strictly increasing sample sizes",
            ));
        }
        if ns[0] < 2 {
            return Err(Error::invalid("ns", "sample sizes must be at least 2"));
        }
        if n_seeds == 0 {
            return Err(Error::invalid("n_seeds", "must be at least 1"));
        }
        if noise.d_y() != target.d_y() {
            return Err(Error::DimensionMismatch {
                expected: target.d_y(),
                got: noise.d_y(),
            });
        }
        let designed = matches!(kernel.family(), KernelFamily::DesignedMercer(_));
        if !designed && gamma != 0.0 {
            return Err(Error::invalid(
                "gamma",
                "black-box kernels support only the Monte Carlo gamma = 0 path",
            ));
        }
        if gamma != 0.0 && (!(0.0..=1.0).contains(&gamma) || gamma >= target.beta()) {
            return Err(Error::invalid("gamma", "requires 0 <= gamma <= 1 and gamma < beta"));
        }
        let theory_exponent =
            (target.beta() - gamma) / (target.beta() + schedule.p);
        Ok(Self {
            config_id,
            target,
            noise,
            kernel,
            ns,
            n_seeds,
            gamma,
            schedule,
            master_seed,
            tolerance: DEFAULT_SLOPE_TOLERANCE,
            fixed_lambda: None,
            theory_exponent,
        })
    }

    /// Replaces the default ±0.12 slope tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Uses a fixed λ for every cell instead of the schedule.
    pub fn with_fixed_lambda(mut self, lambda: f64) -> Self {
        self.fixed_lambda = Some(lambda);
        self
    }

    /// Overrides the theoretical exponent the slope is compared against.
    pub fn with_theory_exponent(mut self, exponent: f64) -> Self {
        self.theory_exponent = exponent;
        self
    }

    pub fn config_id(&self) -> &str {
        &self.config_id
    }

    pub fn ns(&self) -> &[usize] {
        &self.ns
    }

    pub fn n_seeds(&self) -> usize {
        self.n_seeds
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theory_exponent(&self) -> f64 {
        self.theory_exponent
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn lambda_for(&self, n: usize) -> Result<f64> {
        match self.fixed_lambda {
            Some(l) => Ok(l),
            None => lambda_schedule(n, &self.schedule),
        }
    }

    /// All (n index, seed index) cells in row-major order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.ns.len() * self.n_seeds);
        for n_idx in 0..self.ns.len() {
            for seed_idx in 0..self.n_seeds {
                out.push((n_idx, seed_idx));
            }
        }
        out
    }

    /// Per-cell seeds `(data_seed, mc_seed)` derived from the master seed.
    fn cell_seeds(&self, n_idx: usize, seed_idx: usize) -> Result<(u64, u64)> {
        let n = *self.ns.get(n_idx).ok_or_else(|| Error::invalid("n_idx", "out of range"))?;
        if seed_idx >= self.n_seeds {
            return Err(Error::invalid("seed_idx", "out of range"));
        }
        let mut stream = derive_rng(
            self.master_seed,
            &[0x6365_6c6c, n as u64, seed_idx as u64],
        );
        let data_seed = stream.next_u64();
        let mc_seed = stream.next_u64();
        Ok((data_seed, mc_seed))
    }

    /// The exact dataset `run_cell` evaluates for this cell (persistence path).
    pub fn cell_dataset(&self, n_idx: usize, seed_idx: usize) -> Result<Dataset> {
        let (data_seed, _) = self.cell_seeds(n_idx, seed_idx)?;
        sample_dataset(&self.target, &self.noise, self.ns[n_idx], data_seed)
    }

    /// Runs one cell: sample, fit at λ_n, return the squared γ-norm error.
    ///
    /// Designed kernels take the exact embedded-coefficient path; black-box
    /// kernels fall back to Monte Carlo `L₂` (γ = 0 only).
    pub fn run_cell(&self, n_idx: usize, seed_idx: usize) -> Result<f64> {
        let (data_seed, mc_seed) = self.cell_seeds(n_idx, seed_idx)?;
        let n = self.ns[n_idx];
        let data = sample_dataset(&self.target, &self.noise, n, data_seed)?;
        let lambda = self.lambda_for(n)?;
        let fitted = fit(&self.kernel, &data, lambda)?;
        match self.kernel.family() {
            KernelFamily::DesignedMercer(spec) => {
                let chat = embed_coefficients(&fitted, spec)?;
                gamma_error(&chat, &self.target, self.gamma)
            }
            _ => monte_carlo_l2_error(&fitted, &self.target, MC_TEST_POINTS, mc_seed),
        }
    }

    /// Runs every cell sequentially and assembles the report.
    pub fn run(&self) -> Result<RateReport> {
        let mut errors = DMatrix::zeros(self.ns.len(), self.n_seeds);
        for (n_idx, seed_idx) in self.cells() {
            errors[(n_idx, seed_idx)] = self.run_cell(n_idx, seed_idx)?;
        }
        self.assemble_report(errors)
    }

    /// Builds the report from externally computed cell errors
    /// (shape `len(ns) × n_seeds`).
    pub fn assemble_report(&self, errors: DMatrix<f64>) -> Result<RateReport> {
        if errors.nrows() != self.ns.len() || errors.ncols() != self.n_seeds {
            return Err(Error::DimensionMismatch {
                expected: self.ns.len() * self.n_seeds,
                got: errors.nrows() * errors.ncols(),
            });
        }
        if errors.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::invalid("errors", "must be strictly positive and finite"));
        }
        let medians: Vec<f64> = (0..self.ns.len())
            .map(|i| {
                let row: Vec<f64> = errors.row(i).iter().copied().collect();
                median(&row)
            })
            .collect();
        let fitted_slope = fit_rate(&self.ns, &medians)?;
        let pass = libm::fabs(fitted_slope + self.theory_exponent) <= self.tolerance;
        Ok(RateReport {
            config_id: self.config_id.clone(),
            ns: self.ns.clone(),
            errors,
            median_errors: medians,
            fitted_slope,
            theory_exponent: self.theory_exponent,
            tolerance: self.tolerance,
            pass,
        })
    }
}

/// Aggregated result of a rate experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub config_id: String,
    pub ns: Vec<usize>,
    /// Squared γ-norm errors, `len(ns) × n_seeds`.
    pub errors: DMatrix<f64>,
    /// Per-n medians across seeds.
    pub median_errors: Vec<f64>,
    pub fitted_slope: f64,
    pub theory_exponent: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Convenience wrapper: build the experiment and run it sequentially.
#[allow(clippy::too_many_arguments)]
pub fn run_rate_experiment(
    config_id: String,
    target: TargetSpec,
    noise: NoiseSpec,
    kernel: KernelSpec,
    ns: Vec<usize>,
    n_seeds: usize,
    gamma: f64,
    schedule: ScheduleParams,
    master_seed: u64,
) -> Result<RateReport> {
    RateExperiment::new(
        config_id, target, noise, kernel, ns, n_seeds, gamma, schedule, master_seed,
    )?
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Dataset;
    use crate::synth::{make_target, NoiseKind, TargetKind};
    use alloc::string::ToString;
    use alloc::sync::Arc;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn model(i_max: usize, p: f64) -> Arc<SpectralModel> {
        Arc::new(SpectralModel::from_decay(i_max, p).unwrap())
    }

    #[test]
    fn embed_single_constant_basis() {
        // n = 1, e_0 ≡ 1, μ_1 = 1, W = [(1, 0)]: ĉ_11 = 1.
        let spec = Arc::new(SpectralModel::from_eigenvalues(vec![1.0]).unwrap());
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let fitted = FittedModel::from_parts(
            kernel,
            vec![0.3],
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            1.0,
        )
        .unwrap();
        let c = embed_coefficients(&fitted, &spec).unwrap();
        assert_relative_eq!(c.entries()[(0, 0)], 1.0);
        assert_relative_eq!(c.entries()[(0, 1)], 0.0);
    }

    #[test]
    fn embed_rejects_black_box_kernel() {
        let spec = SpectralModel::from_eigenvalues(vec![1.0]).unwrap();
        let kernel = KernelSpec::gaussian(1.0).unwrap();
        let fitted = FittedModel::from_parts(
            kernel,
            vec![0.3],
            DMatrix::from_row_slice(1, 1, &[1.0]),
            1.0,
        )
        .unwrap();
        assert_eq!(
            embed_coefficients(&fitted, &spec),
            Err(Error::NotDesignedKernel)
        );
    }

    #[test]
    fn gamma_error_direct_formula() {
        // ĉ = 0, single c*_11 = 1 at μ_1 = 0.25, γ = 1 → error 4.
        let spec = Arc::new(SpectralModel::from_eigenvalues(vec![0.25]).unwrap());
        // β = 2 so γ = 1 is admissible; c_11 = ±B·μ^{β/2} = ±4·0.25 = ±1.
        let target = make_target(&spec, 2.0, 4.0, 1, TargetKind::SingleChannel, 0).unwrap();
        assert_relative_eq!(target.coefficients().entries()[(0, 0)].abs(), 1.0);
        let zero = CoefficientMatrix::zeros(1, 1);
        assert_relative_eq!(gamma_error(&zero, &target, 1.0).unwrap(), 4.0);
        assert_relative_eq!(
            gamma_error(target.coefficients(), &target, 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn gamma_error_range_checks() {
        let spec = model(8, 0.5);
        let target = make_target(&spec, 1.0, 1.0, 1, TargetKind::Generic, 0).unwrap();
        let zero = CoefficientMatrix::zeros(8, 1);
        assert!(gamma_error(&zero, &target, -0.1).is_err());
        assert!(gamma_error(&zero, &target, 1.0).is_err());
        let wrong = CoefficientMatrix::zeros(4, 1);
        assert!(gamma_error(&wrong, &target, 0.0).is_err());
    }

    #[test]
    fn bias_oracle_direct_substitution() {
        // Single c*_11 = 1 at μ_1 = 1, λ = 1, γ = 0: (1/2)² = 0.25.
        let spec = Arc::new(SpectralModel::from_eigenvalues(vec![1.0]).unwrap());
        let target = make_target(&spec, 1.0, 1.0, 1, TargetKind::SingleChannel, 0).unwrap();
        assert_relative_eq!(bias_oracle(&target, 1.0, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn bias_vanishes_monotonically_as_lambda_shrinks() {
        let spec = model(64, 0.5);
        let target = make_target(&spec, 1.0, 2.0, 3, TargetKind::Generic, 1).unwrap();
        let mut prev = f64::INFINITY;
        for &lambda in &[1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-6, 1e-8] {
            let b = bias_oracle(&target, lambda, 0.3).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-8, "residual bias {prev}");
    }

    #[test]
    fn bias_bounded_by_lemma_for_random_draws() {
        let spec = model(256, 0.5);
        let mut rng = derive_rng(42, &[]);
        for trial in 0..100 {
            let beta = 0.3 + 1.7 * rng.random::<f64>();
            let b: f64 = 0.5 + 2.0 * rng.random::<f64>();
            let target =
                make_target(&spec, beta, b, 2, TargetKind::Generic, trial).unwrap();
            let lambda = libm::pow(10.0, -4.0 * rng.random::<f64>());
            let gamma = beta * rng.random::<f64>();
            let bias = bias_oracle(&target, lambda, gamma).unwrap();
            let bound = b * b * libm::pow(lambda, beta - gamma);
            assert!(
                bias <= bound * (1.0 + 1e-12),
                "trial {trial}: bias {bias} > bound {bound}"
            );
        }
    }

    #[test]
    fn schedule_polynomial_branch() {
        let params = ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap();
        let l = lambda_schedule(1024, &params).unwrap();
        assert_relative_eq!(l, libm::pow(1024.0, -2.0 / 3.0), max_relative = 1e-12);
        // Doubling n scales λ by 2^{-1/(β+p)}.
        let l2 = lambda_schedule(2048, &params).unwrap();
        assert_relative_eq!(l2 / l, libm::pow(2.0, -2.0 / 3.0), max_relative = 1e-12);
    }

    #[test]
    fn schedule_tie_takes_log_branch() {
        // β + p = α = 1: log-corrected branch.
        let params = ScheduleParams::new(0.5, 0.5, 1.0, 2.0).unwrap();
        let n = 1024;
        let l = lambda_schedule(n, &params).unwrap();
        let nf = n as f64;
        let expected = libm::pow(nf / libm::pow(libm::log(nf), 2.0), -1.0);
        assert_relative_eq!(l, expected, max_relative = 1e-12);
        // The correction makes λ larger than the uncorrected power law.
        assert!(l > libm::pow(nf, -1.0));
    }

    #[test]
    fn schedule_validation() {
        assert!(ScheduleParams::new(0.0, 1.0, 0.5, 2.0).is_err());
        assert!(ScheduleParams::new(0.5, 1.0, 0.4, 2.0).is_err());
        assert!(ScheduleParams::new(0.5, 1.0, 0.5, 1.0).is_err());
        let params = ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap();
        assert!(lambda_schedule(1, &params).is_err());
    }

    #[test]
    fn fit_rate_exact_power_laws() {
        let ns = vec![16usize, 32, 64, 128, 256];
        let errs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        assert_relative_eq!(fit_rate(&ns, &errs).unwrap(), -1.0, epsilon = 1e-10);
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| 5.0 * libm::pow(n as f64, -2.0 / 3.0))
            .collect();
        assert_relative_eq!(fit_rate(&ns, &errs).unwrap(), -2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn fit_rate_rejects_degenerate_inputs() {
        assert!(fit_rate(&[16, 32, 64], &[1.0, 0.5, 0.25]).is_err());
        assert!(fit_rate(&[16, 32, 32, 64], &[1.0, 0.5, 0.4, 0.25]).is_err());
        assert!(fit_rate(&[16, 32, 64, 128], &[1.0, 0.5, 0.0, 0.25]).is_err());
    }

    #[test]
    fn mc_error_zero_model_estimates_l2_norm() {
        let spec = model(32, 0.5);
        let target = make_target(&spec, 1.0, 1.5, 2, TargetKind::Generic, 3).unwrap();
        let exact = spec.gamma_norm(target.coefficients(), 0.0).unwrap();
        let mc = monte_carlo_l2_error_fn(
            |_| Ok(DVector::zeros(2)),
            |x| eval_target(&target, x),
            100_000,
            7,
        )
        .unwrap();
        assert_relative_eq!(mc, exact * exact, max_relative = 0.02);
    }

    #[test]
    fn mc_error_matches_exact_gamma_zero() {
        let spec = model(32, 0.5);
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 1.0, 1.0, 2, TargetKind::Generic, 5).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.3, 2).unwrap();
        let data = sample_dataset(&target, &noise, 128, 11).unwrap();
        let fitted = fit(&kernel, &data, 0.01).unwrap();
        let chat = embed_coefficients(&fitted, &spec).unwrap();
        let exact = gamma_error(&chat, &target, 0.0).unwrap();
        let mc = monte_carlo_l2_error(&fitted, &target, 100_000, 13).unwrap();
        assert_relative_eq!(mc, exact, max_relative = 0.02);
    }

    #[test]
    fn noiseless_errors_track_bias_oracle() {
        // σ̄ = 0 and a tiny fixed λ: the variance term vanishes and each
        // cell error is the finite-sample image of the bias oracle.
        let spec = model(64, 0.5);
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 1.0, 1.0, 2, TargetKind::Generic, 2).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.0, 2).unwrap();
        let lambda = 1e-2;
        let exp = RateExperiment::new(
            "noiseless".to_string(),
            target.clone(),
            noise,
            kernel,
            vec![512, 768, 1024, 1536],
            3,
            0.0,
            ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap(),
            9,
        )
        .unwrap()
        .with_fixed_lambda(lambda);
        let bias = bias_oracle(&target, lambda, 0.0).unwrap();
        for (n_idx, seed_idx) in exp.cells() {
            let err = exp.run_cell(n_idx, seed_idx).unwrap();
            assert!(
                err >= 0.5 * bias && err <= 1.5 * bias,
                "cell ({n_idx}, {seed_idx}): error {err} vs bias {bias}"
            );
        }
    }

    #[test]
    fn cell_dataset_is_the_sampled_cell_data() {
        let spec = model(16, 0.5);
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 1.0, 1.0, 2, TargetKind::Generic, 2).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.2, 2).unwrap();
        let exp = RateExperiment::new(
            "cells".to_string(),
            target.clone(),
            noise,
            kernel.clone(),
            vec![16, 24, 32, 48],
            2,
            0.25,
            ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap(),
            7,
        )
        .unwrap();
        let data = exp.cell_dataset(1, 0).unwrap();
        assert_eq!(data.len(), 24);
        assert_eq!(data, exp.cell_dataset(1, 0).unwrap());
        // Refitting the exposed dataset reproduces the cell error bitwise.
        let lambda = exp.lambda_for(24).unwrap();
        let fitted = fit(&kernel, &data, lambda).unwrap();
        let chat = embed_coefficients(&fitted, &spec).unwrap();
        let err = gamma_error(&chat, &target, 0.25).unwrap();
        assert_eq!(err.to_bits(), exp.run_cell(1, 0).unwrap().to_bits());
        assert!(exp.cell_dataset(4, 0).is_err());
        assert!(exp.cell_dataset(0, 2).is_err());
    }

    #[test]
    fn experiment_is_deterministic_and_order_independent() {
        let spec = model(32, 0.5);
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 1.0, 1.0, 1, TargetKind::Generic, 2).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.2, 1).unwrap();
        let exp = RateExperiment::new(
            "det".to_string(),
            target,
            noise,
            kernel,
            vec![16, 24, 32, 48],
            2,
            0.0,
            ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap(),
            123,
        )
        .unwrap();
        let report = exp.run().unwrap();
        // Recompute cells in reverse order; bitwise identical errors.
        let mut errors = DMatrix::zeros(4, 2);
        for (n_idx, seed_idx) in exp.cells().into_iter().rev() {
            errors[(n_idx, seed_idx)] = exp.run_cell(n_idx, seed_idx).unwrap();
        }
        let report2 = exp.assemble_report(errors).unwrap();
        assert_eq!(report, report2);
    }

    #[test]
    fn decomposition_triangle_inequality() {
        // Total ≤ 2·(sampling term) + 2·(bias term) with the analytic
        // λ-shrunk coefficients as the intermediate point.
        let spec = model(64, 0.5);
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 1.0, 1.0, 2, TargetKind::Generic, 4).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.3, 2).unwrap();
        let data = sample_dataset(&target, &noise, 200, 21).unwrap();
        let lambda = 0.05;
        let gamma = 0.25;
        let fitted = fit(&kernel, &data, lambda).unwrap();
        let chat = embed_coefficients(&fitted, &spec).unwrap();
        let total = gamma_error(&chat, &target, gamma).unwrap();

        let shrunk = DMatrix::from_fn(64, 2, |i, j| {
            let mu = spec.eigenvalues()[i];
            target.coefficients().entries()[(i, j)] * mu / (mu + lambda)
        });
        let mut variance = 0.0;
        for i in 0..64 {
            let w = libm::pow(spec.eigenvalues()[i], -gamma);
            for j in 0..2 {
                let d = chat.entries()[(i, j)] - shrunk[(i, j)];
                variance += d * d * w;
            }
        }
        let bias = bias_oracle(&target, lambda, gamma).unwrap();
        assert!(total <= 2.0 * variance + 2.0 * bias + 1e-12);
    }

    #[test]
    fn experiment_rejects_black_box_with_positive_gamma() {
        let spec = model(16, 0.5);
        let target = make_target(&spec, 1.0, 1.0, 1, TargetKind::Generic, 0).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.1, 1).unwrap();
        let kernel = KernelSpec::gaussian(0.5).unwrap();
        let r = RateExperiment::new(
            "bad".to_string(),
            target,
            noise,
            kernel,
            vec![16, 24, 32, 48],
            1,
            0.25,
            ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap(),
            0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn theory_exponents_match_theorem() {
        let spec = model(16, 0.5);
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.1, 1).unwrap();
        let kernel = KernelSpec::designed_mercer(spec.clone());
        for &(beta, gamma, expected) in
            &[(1.0, 0.0, 2.0 / 3.0), (2.0, 0.0, 0.8), (1.0, 0.25, 0.5)]
        {
            let target = make_target(&spec, beta, 1.0, 1, TargetKind::Generic, 0).unwrap();
            let exp = RateExperiment::new(
                "exp".to_string(),
                target,
                noise.clone(),
                kernel.clone(),
                vec![16, 24, 32, 48],
                1,
                gamma,
                ScheduleParams::new(0.5, beta, 0.5, 2.0).unwrap(),
                0,
            )
            .unwrap();
            assert_relative_eq!(exp.theory_exponent(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn representer_equivalence_small_case() {
        let spec = Arc::new(SpectralModel::from_decay(64, 0.5).unwrap());
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 1.0, 1.0, 2, TargetKind::Generic, 0).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.2, 2).unwrap();
        let data = sample_dataset(&target, &noise, 32, 0).unwrap();
        let lambda = 0.05;
        let fitted = fit(&kernel, &data, lambda).unwrap();
        let dual = embed_coefficients(&fitted, &spec).unwrap();
        let primal = crate::estimator::feature_ridge_oracle(&spec, &data, lambda).unwrap();
        let max_diff = (dual.entries() - primal.entries())
            .iter()
            .fold(0.0f64, |a, &v| a.max(libm::fabs(v)));
        assert!(max_diff <= 1e-8, "max diff {max_diff}");
    }

    #[test]
    fn assemble_report_validates_shape_and_positivity() {
        let spec = model(16, 0.5);
        let target = make_target(&spec, 1.0, 1.0, 1, TargetKind::Generic, 0).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.1, 1).unwrap();
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let exp = RateExperiment::new(
            "shape".to_string(),
            target,
            noise,
            kernel,
            vec![16, 24, 32, 48],
            2,
            0.0,
            ScheduleParams::new(0.5, 1.0, 0.5, 2.0).unwrap(),
            0,
        )
        .unwrap();
        assert!(exp.assemble_report(DMatrix::zeros(3, 2)).is_err());
        assert!(exp.assemble_report(DMatrix::zeros(4, 2)).is_err());
        let ok = DMatrix::from_fn(4, 2, |i, _| 1.0 / (i + 1) as f64);
        assert!(exp.assemble_report(ok).is_ok());
    }

    #[test]
    fn near_interpolation_mc_error_small() {
        let spec = model(16, 0.5);
        let kernel = KernelSpec::designed_mercer(spec.clone());
        let target = make_target(&spec, 2.0, 1.0, 1, TargetKind::Generic, 6).unwrap();
        let noise = NoiseSpec::new(NoiseKind::GaussianIso, 0.0, 1).unwrap();
        let data = sample_dataset(&target, &noise, 512, 8).unwrap();
        let fitted = fit(&kernel, &data, 1e-10).unwrap();
        let mc = monte_carlo_l2_error(&fitted, &target, 2_000, 9).unwrap();
        assert!(mc <= 1e-4, "mc error {mc}");
        let _ = Dataset::new(vec![0.5], DMatrix::zeros(1, 1)).unwrap();
    }
}
