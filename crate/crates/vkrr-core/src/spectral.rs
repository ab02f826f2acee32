//! Designed Mercer models with exactly known spectrum, interpolation-space
//! γ-norms, effective dimension, embedding constants, and Nyström spectrum
//! estimation for black-box kernels.
//!
//! The basis is fixed to the cosine system on `[0,1]` with uniform marginal:
//! `e_0(x) = 1`, `e_i(x) = sqrt(2)·cos(iπx)`. It is exactly orthonormal and
//! uniformly bounded by `sqrt(2)`, so every γ-norm computation here is plain
//! arithmetic on coefficients with no quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::kernel::KernelSpec;
use crate::util::ols_slope;
use crate::{Error, Result};

/// Number of grid points used to scan `sup_x Σ μ_i^α e_i(x)²`.
const EMBEDDING_GRID: usize = 10_000;

/// A designed Mercer kernel spectrum: eigenvalues `μ_i` attached to the
/// cosine basis, optionally constructed from the polynomial decay law
/// `μ_i = scale·i^{-1/p}` (index starting at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    mu: DVector<f64>,
    decay_p: Option<f64>,
    decay_scale: f64,
}

impl SpectralModel {
    /// Builds a model with `i_max` eigenvalues `μ_i = i^{-1/p}`, `i = 1..=i_max`.
    pub fn from_decay(i_max: usize, p: f64) -> Result<Self> {
        Self::from_decay_scaled(i_max, p, 1.0)
    }

    /// Decay-law constructor with an explicit scale factor.
    pub fn from_decay_scaled(i_max: usize, p: f64, scale: f64) -> Result<Self> {
        if i_max == 0 {
            return Err(Error::invalid("i_max", "must be at least 1"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("decay_p", "must lie in (0, 1]"));
        }
        if !(scale > 0.0) {
            return Err(Error::invalid("decay_scale", "must be positive"));
        }
        let mu = DVector::from_fn(i_max, |i, _| {
            scale * libm::pow((i + 1) as f64, -1.0 / p)
        });
        Ok(Self {
            mu,
            decay_p: Some(p),
            decay_scale: scale,
        })
    }

    /// Builds a model from an explicit eigenvalue list (strictly positive,
    /// nonincreasing). No decay law is attached.
    pub fn from_eigenvalues(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("mu", "eigenvalue list is empty"));
        }
        for pair in mu.windows(2) {
            if pair[1] > pair[0] {
                return Err(Error::invalid("mu", "eigenvalues must be nonincreasing"));
            }
        }
        if mu.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid("mu", "eigenvalues must be strictly positive"));
        }
        Ok(Self {
            mu: DVector::from_vec(mu),
            decay_p: None,
            decay_scale: 1.0,
        })
    }

    pub fn i_max(&self) -> usize {
        self.mu.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn decay_p(&self) -> Option<f64> {
        self.decay_p
    }

    pub fn decay_scale(&self) -> f64 {
        self.decay_scale
    }

    /// `e_0 = 1`, `e_i(x) = sqrt(2)·cos(iπx)` for `i >= 1`.
    pub fn basis_eval(&self, i: usize, x: f64) -> f64 {
        debug_assert!(i < self.i_max());
        if i == 0 {
            1.0
        } else {
            core::f64::consts::SQRT_2 * libm::cos(i as f64 * PI * x)
        }
    }

    /// Basis matrix `E` with `E[t, i] = e_i(x_t)`, shape `n × i_max`.
    pub fn basis_matrix(&self, points: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(points.len(), self.i_max(), |t, i| {
            self.basis_eval(i, points[t])
        })
    }

    /// γ-norm of a coefficient matrix: `sqrt(Σ_{i,j} c_ij² μ_i^{-γ})`.
    /// γ = 0 gives the `L₂(π;Y)` norm.
    pub fn gamma_norm(&self, c: &CoefficientMatrix, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::invalid("gamma", "must be nonnegative"));
        }
        if c.i_max() != self.i_max() {
            return Err(Error::DimensionMismatch {
                expected: self.i_max(),
                got: c.i_max(),
            });
        }
        let mut sum = 0.0;
        for i in 0..self.i_max() {
            let w = libm::pow(self.mu[i], -gamma);
            for j in 0..c.d_y() {
                let v = c.entries()[(i, j)];
                sum += v * v * w;
            }
        }
        Ok(libm::sqrt(sum))
    }

    /// γ-norm of a scalar function given by its `L₂(π)`-basis coefficients.
    pub fn scalar_gamma_norm(&self, c: &DVector<f64>, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::invalid("gamma", "must be nonnegative"));
        }
        if c.len() != self.i_max() {
            return Err(Error::DimensionMismatch {
                expected: self.i_max(),
                got: c.len(),
            });
        }
        let mut sum = 0.0;
        for i in 0..self.i_max() {
            sum += c[i] * c[i] * libm::pow(self.mu[i], -gamma);
        }
        Ok(libm::sqrt(sum))
    }

    /// Effective dimension `N(λ) = Σ_i μ_i/(μ_i + λ)`.
    pub fn effective_dimension(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        Ok(self.mu.iter().map(|&m| m / (m + lambda)).sum())
    }

    /// Certifies `N(λ)·λ^p <= D` over a λ-grid for a decay-law model.
    ///
    /// Returns the grid maximum `D_hat` and a pass flag: the fitted log-log
    /// slope of `N(λ)·λ^p` against `λ` must be at least `-0.05`, i.e. the
    /// product shows no growth trend as `λ → 0`.
    pub fn certify_effective_dimension_bound(
        &self,
        lambda_grid: &[f64],
    ) -> Result<(f64, bool)> {
        let p = self.decay_p.ok_or(Error::MissingDecayLaw)?;
        if lambda_grid.len() < 2 {
            return Err(Error::invalid("lambda_grid", "needs at least 2 points"));
        }
        if lambda_grid.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::invalid("lambda_grid", "grid must lie in (0, 1]"));
        }
        let mut log_lambda = Vec::with_capacity(lambda_grid.len());
        let mut log_product = Vec::with_capacity(lambda_grid.len());
        let mut d_hat = f64::NEG_INFINITY;
        for &lambda in lambda_grid {
            let product = self.effective_dimension(lambda)? * libm::pow(lambda, p);
            d_hat = d_hat.max(product);
            log_lambda.push(libm::log(lambda));
            log_product.push(libm::log(product));
        }
        let slope = ols_slope(&log_lambda, &log_product);
        Ok((d_hat, d_hat.is_finite() && slope >= -0.05))
    }

    /// Embedding constant `A` with `sup_x Σ_i μ_i^α e_i(x)² <= A²`.
    ///
    /// For the cosine basis the supremum is attained at `x = 0` where every
    /// `cos²` term is 1, so the grid maximum (which includes `x = 0`) equals
    /// the supremum; the analytic envelope `sqrt(2 Σ μ_i^α)` is kept as a
    /// certified fallback and the smaller of the two is returned.
    pub fn embedding_constant(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 1]"));
        }
        let mu_alpha: Vec<f64> = self.mu.iter().map(|&m| libm::pow(m, alpha)).collect();
        let envelope_sq = 2.0 * mu_alpha.iter().sum::<f64>();
        let mut grid_max = 0.0f64;
        for g in 0..EMBEDDING_GRID {
            let x = g as f64 / (EMBEDDING_GRID - 1) as f64;
            let mut s = mu_alpha[0];
            for i in 1..self.i_max() {
                let e = core::f64::consts::SQRT_2 * libm::cos(i as f64 * PI * x);
                s += mu_alpha[i] * e * e;
            }
            grid_max = grid_max.max(s);
        }
        Ok(libm::sqrt(grid_max.min(envelope_sq)))
    }
}

/// `L₂(π;Y)`-basis coefficients of a function `F = Σ_{i,j} c_ij d_j [e_i]`,
/// stored as an `i_max × d_Y` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    entries: DMatrix<f64>,
}

impl CoefficientMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "coefficient matrix",
            });
        }
        Ok(Self { entries })
    }

    pub fn zeros(i_max: usize, d_y: usize) -> Self {
        Self {
            entries: DMatrix::zeros(i_max, d_y),
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn i_max(&self) -> usize {
        self.entries.nrows()
    }

    pub fn d_y(&self) -> usize {
        self.entries.ncols()
    }
}

/// Estimated eigenvalues of the integral operator from the eigenvalues of
/// `(1/m)·Gram(sample)`, clipped at zero and sorted nonincreasing.
pub fn nystrom_spectrum(spec: &KernelSpec, sample: &[f64]) -> Result<DVector<f64>> {
    if sample.len() < 2 {
        return Err(Error::invalid("sample", "needs at least 2 points"));
    }
    let m = sample.len();
    let mut gram = spec.gram_matrix(sample)?;
    gram /= m as f64;
    let eig = gram
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::EigenFailure)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(values))
}

/// Fits the polynomial decay exponent of an estimated spectrum.
///
/// Ordinary least squares of `log μ̂_i` against `log i` (index starting at 1)
/// over `fit_range`; returns `p_hat = -1/slope`.
pub fn estimate_decay(mu_hat: &[f64], fit_range: Range<usize>) -> Result<f64> {
    let end = fit_range.end.min(mu_hat.len());
    let mut log_i = Vec::new();
    let mut log_mu = Vec::new();
    for idx in fit_range.start..end {
        if mu_hat[idx] > 0.0 {
            log_i.push(libm::log((idx + 1) as f64));
            log_mu.push(libm::log(mu_hat[idx]));
        }
    }
    if log_i.len() < 5 {
        return Err(Error::invalid(
            "fit_range",
            "needs at least 5 strictly positive eigenvalues",
        ));
    }
    let slope = ols_slope(&log_i, &log_mu);
    Ok(-1.0 / slope)
}

/// Default fit range for [`estimate_decay`]: indices `[5, min(50, m/4))`,
/// avoiding boundary and noise-floor effects.
pub fn default_decay_fit_range(m: usize) -> Range<usize> {
    5..50.min(m / 4)
}
