//! Reduction machinery for the minimax lower bound: projection of
//! vector-valued problems to scalar ones, rank-one Gaussian conditional
//! families, and the KL-divergence identity between the induced joints.
//!
//! The packing family behind the full lower-bound proof is deliberately not
//! constructed; this module provides the verifiable building blocks and a
//! Monte Carlo cross-check of the KL identity.

use alloc::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::rng::derive_rng;
use crate::spectral::{CoefficientMatrix, SpectralModel};
use crate::{Error, Result};

/// A scalar function `f = Σ_i c_i [e_i]` given by its `L₂(π)`-basis
/// coefficients over a spectral model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunctionCoeffs {
    model: Arc<SpectralModel>,
    c: DVector<f64>,
}

impl ScalarFunctionCoeffs {
    pub fn new(model: Arc<SpectralModel>, c: DVector<f64>) -> Result<Self> {
        if c.len() != model.i_max() {
            return Err(Error::DimensionMismatch {
                expected: model.i_max(),
                got: c.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "scalar coefficients",
            });
        }
        Ok(Self { model, c })
    }

    pub fn model(&self) -> &Arc<SpectralModel> {
        &self.model
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.c
    }

    /// Pointwise evaluation `f(x) = Σ_i c_i e_i(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        (0..self.model.i_max())
            .map(|i| self.c[i] * self.model.basis_eval(i, x))
            .sum()
    }
}

/// Projects a vector-valued function onto the direction `a`:
/// `⟨F(·), a⟩_Y` has basis coefficients `c_i = Σ_j F_ij·a_j`.
pub fn project_function(
    f: &CoefficientMatrix,
    a: &DVector<f64>,
    model: &Arc<SpectralModel>,
) -> Result<ScalarFunctionCoeffs> {
    if f.d_y() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: f.d_y(),
            got: a.len(),
        });
    }
    if f.i_max() != model.i_max() {
        return Err(Error::DimensionMismatch {
            expected: model.i_max(),
            got: f.i_max(),
        });
    }
    ScalarFunctionCoeffs::new(model.clone(), f.entries() * a)
}

/// Checks the reduction inequality `‖⟨F(·),a⟩‖_γ ≤ ‖a‖·‖F‖_γ` by computing
/// both sides exactly; returns `lhs ≤ rhs·(1 + 10⁻¹⁰)`.
pub fn check_reduction_inequality(
    f: &CoefficientMatrix,
    a: &DVector<f64>,
    gamma: f64,
    model: &Arc<SpectralModel>,
) -> Result<bool> {
    let projected = project_function(f, a, model)?;
    let lhs = model.scalar_gamma_norm(projected.coefficients(), gamma)?;
    let rhs = a.norm() * model.gamma_norm(f, gamma)?;
    Ok(lhs <= rhs * (1.0 + 1e-10))
}

/// Draws from the rank-one Gaussian conditional `N_Y(f(x)·d₁, σ̄²·d₁⊗d₁)`:
/// returns `f(x)·d₁ + σ̄·z·d₁` with a standard Gaussian `z`.
pub fn gaussian_conditional_sample(
    f: &ScalarFunctionCoeffs,
    x: f64,
    sigma_bar: f64,
    d_y: usize,
    seed: u64,
) -> Result<DVector<f64>> {
    if !(sigma_bar > 0.0) {
        return Err(Error::invalid("sigma_bar", "must be positive"));
    }
    if d_y == 0 {
        return Err(Error::invalid("d_y", "must be at least 1"));
    }
    let mut rng = derive_rng(seed, &[0x636f_6e64]);
    let z: f64 = rng.sample(StandardNormal);
    let mut out = DVector::zeros(d_y);
    out[0] = f.eval(x) + sigma_bar * z;
    Ok(out)
}

/// Exact KL divergence between the joints of the scalar Gaussian models
/// `(x, y) ~ π ⊗ N(f(x), σ̄²)` and `π ⊗ N(g(x), σ̄²)`:
/// `KL = ‖f − g‖²_{L₂(π)} / (2σ̄²) = Σ_i (f_i − g_i)² / (2σ̄²)`.
pub fn kl_scalar_joints(
    f: &ScalarFunctionCoeffs,
    g: &ScalarFunctionCoeffs,
    sigma_bar: f64,
) -> Result<f64> {
    if f.model().as_ref() != g.model().as_ref() {
        return Err(Error::ModelMismatch);
    }
    if !(sigma_bar > 0.0) {
        return Err(Error::invalid("sigma_bar", "must be positive"));
    }
    let diff = f.coefficients() - g.coefficients();
    Ok(diff.norm_squared() / (2.0 * sigma_bar * sigma_bar))
}

/// Monte Carlo estimate of the same KL divergence via the Gaussian
/// log-density ratio `E_f[log(p_f/p_g)]` over fresh `(x, y)` draws.
pub fn kl_monte_carlo(
    f: &ScalarFunctionCoeffs,
    g: &ScalarFunctionCoeffs,
    sigma_bar: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if f.model().as_ref() != g.model().as_ref() {
        return Err(Error::ModelMismatch);
    }
    if !(sigma_bar > 0.0) {
        return Err(Error::invalid("sigma_bar", "must be positive"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut rng = derive_rng(seed, &[0x6b6c_6d63]);
    let inv_two_var = 1.0 / (2.0 * sigma_bar * sigma_bar);
    let mut sum = 0.0;
    for _ in 0..n_samples {
        let x: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        let fx = f.eval(x);
        let gx = g.eval(x);
        let y = fx + sigma_bar * z;
        let rf = y - fx;
        let rg = y - gx;
        sum += (rg * rg - rf * rf) * inv_two_var;
    }
    Ok(sum / n_samples as f64)
}

/// Random coefficient matrix for property tests and the demo.
pub fn random_coefficients(
    model: &SpectralModel,
    d_y: usize,
    seed: u64,
) -> Result<CoefficientMatrix> {
    if d_y == 0 {
        return Err(Error::invalid("d_y", "must be at least 1"));
    }
    let mut rng = derive_rng(seed, &[0x7263_6f66]);
    let m = DMatrix::from_fn(model.i_max(), d_y, |i, _| {
        let scale = libm::pow((i + 1) as f64, -1.0);
        scale * rng.sample::<f64, _>(StandardNormal)
    });
    CoefficientMatrix::new(m)
}

/// Random direction vector on the unit sphere.
pub fn random_direction(d_y: usize, seed: u64) -> Result<DVector<f64>> {
    if d_y == 0 {
        return Err(Error::invalid("d_y", "must be at least 1"));
    }
    let mut rng = derive_rng(seed, &[0x7264_6972]);
    loop {
        let g = DVector::from_fn(d_y, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-12 {
            return Ok(g / norm);
        }
        let _ = rng.next_u64();
    }
}
