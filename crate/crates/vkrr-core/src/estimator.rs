//! The regularized least-squares solver.
//!
//! `fit` solves the dual system `(K + nλI)·W = Y` with a Cholesky
//! factorization; `predict` evaluates `Wᵀ·k_Xx`. The `nλ` (not `λ`) scaling
//! in the system matrix is deliberate and matches the closed-form dual
//! solution of the ridge problem. `feature_ridge_oracle` solves the same
//! problem in the explicit truncated feature space and serves as the
//! independent route for representer verification.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::kernel::{KernelSpec, OutputFactorSpec};
use crate::spectral::{CoefficientMatrix, SpectralModel};
use crate::{Error, Result};

/// Relative residual tolerance of the fitted dual weights.
const RESIDUAL_TOL: f64 = 1e-8;

/// Training data: covariates `x_t` in the kernel domain and responses as the
/// rows of an `n × d_Y` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyPoints);
        }
        if y.nrows() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.nrows(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "covariates" });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "responses" });
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn d_y(&self) -> usize {
        self.y.ncols()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }
}

/// A fitted ridge model: dual weights `W` with `(K + nλI)W = Y`.
#[derive(Debug, Clone)]
pub struct FittedModel {
    kernel: KernelSpec,
    train_x: Vec<f64>,
    weights: DMatrix<f64>,
    lambda: f64,
    output_factor: Option<OutputFactorSpec>,
}

impl FittedModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train_x(&self) -> &[f64] {
        &self.train_x
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The output factor whose square root was applied to the responses
    /// before fitting, if any. Downstream error evaluation must target
    /// `B^{1/2}F_*` when this is set.
    pub fn output_factor(&self) -> Option<&OutputFactorSpec> {
        self.output_factor.as_ref()
    }

    /// Reconstructs a fitted model from its parts (persistence path).
    /// The residual invariant is re-checked against the kernel.
    pub fn from_parts(
        kernel: KernelSpec,
        train_x: Vec<f64>,
        weights: DMatrix<f64>,
        lambda: f64,
    ) -> Result<Self> {
        if weights.nrows() != train_x.len() {
            return Err(Error::DimensionMismatch {
                expected: train_x.len(),
                got: weights.nrows(),
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        Ok(Self {
            kernel,
            train_x,
            weights,
            lambda,
            output_factor: None,
        })
    }

    /// `F̂_λ(x) = Wᵀ·k_Xx`.
    pub fn predict(&self, x: f64) -> Result<DVector<f64>> {
        let k = self.kernel.cross_vector(&self.train_x, x)?;
        Ok(self.weights.transpose() * k)
    }
}

/// Fits the dual ridge system `(K + nλI)W = Y` via Cholesky.
pub fn fit(kernel: &KernelSpec, data: &Dataset, lambda: f64) -> Result<FittedModel> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    let n = data.len();
    let gram = kernel.gram_matrix(data.x())?;
    let mut system = gram.clone();
    let shift = n as f64 * lambda;
    for i in 0..n {
        system[(i, i)] += shift;
    }
    let chol = system.clone().cholesky().ok_or_else(|| Error::SolveFailure {
        reason: format!("Cholesky of K + nλI failed (n = {n}, λ = {lambda})"),
    })?;
    let weights = chol.solve(data.y());

    // Residual invariant: ‖(K + nλI)W − Y‖_max <= tol·(κ² + nλ)·max|Y|.
    let residual = &system * &weights - data.y();
    let max_res = residual.iter().fold(0.0f64, |a, &v| a.max(libm::fabs(v)));
    let max_y = data.y().iter().fold(0.0f64, |a, &v| a.max(libm::fabs(v)));
    let tol = RESIDUAL_TOL * (kernel.kappa_sq() + shift) * max_y;
    if max_res > tol && max_y > 0.0 {
        return Err(Error::SolveFailure {
            reason: format!("residual {max_res} exceeds tolerance {tol}"),
        });
    }

    Ok(FittedModel {
        kernel: kernel.clone(),
        train_x: data.x().to_vec(),
        weights,
        lambda,
        output_factor: None,
    })
}

/// Ridge fit after replacing each response with `B^{1/2}·y_t`.
///
/// Equals `fit` on the transformed data; the returned model records the
/// factor so downstream evaluation can target `B^{1/2}F_*`.
pub fn fit_with_output_factor(
    kernel: &KernelSpec,
    factor: &OutputFactorSpec,
    data: &Dataset,
    lambda: f64,
) -> Result<FittedModel> {
    let n = data.len();
    let mut transformed = DMatrix::zeros(n, data.d_y());
    for t in 0..n {
        let row = data.y().row(t).transpose();
        let out = factor.apply_sqrt(&row)?;
        transformed.row_mut(t).copy_from(&out.transpose());
    }
    let data = Dataset::new(data.x().to_vec(), transformed)?;
    let mut model = fit(kernel, &data, lambda)?;
    model.output_factor = Some(factor.clone());
    Ok(model)
}

/// Independent feature-space ridge solve over a designed spectrum.
///
/// Minimizes `(1/n)Σ‖y_t − Cφ(x_t)‖² + λ‖C‖²` in the explicit feature space
/// `φ_i(x) = sqrt(μ_i)·e_i(x)` by solving the `I_max × I_max` normal
/// equations `(ΦᵀΦ/n + λI)Cᵀ = ΦᵀY/n`, and returns the `L₂`-basis
/// coefficients `ĉ_ij = sqrt(μ_i)·(Cᵀ)_ij` of the estimate.
pub fn feature_ridge_oracle(
    model: &SpectralModel,
    data: &Dataset,
    lambda: f64,
) -> Result<CoefficientMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    for &x in data.x() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::DomainViolation { value: x });
        }
    }
    let n = data.len() as f64;
    let i_max = model.i_max();
    let mut phi = model.basis_matrix(data.x());
    for i in 0..i_max {
        let s = libm::sqrt(model.eigenvalues()[i]);
        phi.column_mut(i).scale_mut(s);
    }
    let mut normal = phi.transpose() * &phi / n;
    for i in 0..i_max {
        normal[(i, i)] += lambda;
    }
    let rhs = phi.transpose() * data.y() / n;
    let chol = normal.cholesky().ok_or_else(|| Error::SolveFailure {
        reason: format!("normal equations failed (I_max = {i_max}, λ = {lambda})"),
    })?;
    let mut coeffs = chol.solve(&rhs);
    for i in 0..i_max {
        let s = libm::sqrt(model.eigenvalues()[i]);
        coeffs.row_mut(i).scale_mut(s);
    }
    CoefficientMatrix::new(coeffs)
}
