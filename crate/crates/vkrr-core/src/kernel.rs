//! Scalar kernel evaluation, Gram assembly, and the PSD output factor `B`
//! of the operator-valued kernel `K(x,x') = k(x,x')·B`.

use alloc::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::spectral::SpectralModel;
use crate::{Error, Result};

/// Half-integer Matérn orders. The Sobolev instantiation in dimension one
/// with integer smoothness `m` yields exactly `ν = m - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaternOrder {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternOrder {
    pub fn from_nu(nu: f64) -> Result<Self> {
        if nu == 0.5 {
            Ok(MaternOrder::Half)
        } else if nu == 1.5 {
            Ok(MaternOrder::ThreeHalves)
        } else if nu == 2.5 {
            Ok(MaternOrder::FiveHalves)
        } else {
            Err(Error::UnsupportedMaternOrder { nu })
        }
    }

    pub fn nu(self) -> f64 {
        match self {
            MaternOrder::Half => 0.5,
            MaternOrder::ThreeHalves => 1.5,
            MaternOrder::FiveHalves => 2.5,
        }
    }
}

/// Exact closed-form Matérn value at distance `r >= 0`, normalized so the
/// value at `r = 0` is 1. The input scale `sqrt(2ν)` is baked in.
pub fn matern_half_integer(order: MaternOrder, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::invalid("r", "distance must be nonnegative"));
    }
    Ok(match order {
        MaternOrder::Half => libm::exp(-r),
        MaternOrder::ThreeHalves => {
            let t = libm::sqrt(3.0) * r;
            (1.0 + t) * libm::exp(-t)
        }
        MaternOrder::FiveHalves => {
            let t = libm::sqrt(5.0) * r;
            (1.0 + t + t * t / 3.0) * libm::exp(-t)
        }
    })
}

#[derive(Debug, Clone)]
pub enum KernelFamily {
    /// Truncated Mercer sum over a designed spectrum; domain `[0,1]`.
    DesignedMercer(Arc<SpectralModel>),
    Gaussian { lengthscale: f64 },
    Laplacian { lengthscale: f64 },
    Matern { order: MaternOrder },
}

/// A scalar kernel together with its certified bound `κ² >= sup_x k(x,x)`.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    kappa_sq: f64,
}

impl KernelSpec {
    pub fn designed_mercer(model: Arc<SpectralModel>) -> Self {
        // sup|e_0|² = 1, sup|e_i|² = 2 for the cosine basis.
        let mu = model.eigenvalues();
        let kappa_sq = mu[0] + 2.0 * mu.iter().skip(1).sum::<f64>();
        Self {
            family: KernelFamily::DesignedMercer(model),
            kappa_sq,
        }
    }

    pub fn gaussian(lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) {
            return Err(Error::invalid("lengthscale", "must be positive"));
        }
        Ok(Self {
            family: KernelFamily::Gaussian { lengthscale },
            kappa_sq: 1.0,
        })
    }

    pub fn laplacian(lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) {
            return Err(Error::invalid("lengthscale", "must be positive"));
        }
        Ok(Self {
            family: KernelFamily::Laplacian { lengthscale },
            kappa_sq: 1.0,
        })
    }

    pub fn matern(order: MaternOrder) -> Self {
        Self {
            family: KernelFamily::Matern { order },
            kappa_sq: 1.0,
        }
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    /// Certified bound with `k(x,x) <= κ²` for all admissible `x`.
    pub fn kappa_sq(&self) -> f64 {
        self.kappa_sq
    }

    /// The spectral model behind a designed-Mercer kernel, if any.
    pub fn spectral_model(&self) -> Option<&Arc<SpectralModel>> {
        match &self.family {
            KernelFamily::DesignedMercer(model) => Some(model),
            _ => None,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite { context: "kernel input" });
        }
        if matches!(self.family, KernelFamily::DesignedMercer(_)) && !(0.0..=1.0).contains(&x) {
            return Err(Error::DomainViolation { value: x });
        }
        Ok(())
    }

    /// `k(x, x')`.
    pub fn eval_scalar(&self, x: f64, x_prime: f64) -> Result<f64> {
        self.check_domain(x)?;
        self.check_domain(x_prime)?;
        let r = libm::fabs(x - x_prime);
        Ok(match &self.family {
            KernelFamily::DesignedMercer(model) => {
                let mut sum = 0.0;
                for i in 0..model.i_max() {
                    sum += model.eigenvalues()[i]
                        * model.basis_eval(i, x)
                        * model.basis_eval(i, x_prime);
                }
                sum
            }
            KernelFamily::Gaussian { lengthscale } => {
                let s = r / lengthscale;
                libm::exp(-0.5 * s * s)
            }
            KernelFamily::Laplacian { lengthscale } => libm::exp(-r / lengthscale),
            KernelFamily::Matern { order } => matern_half_integer(*order, r)?,
        })
    }

    /// Gram matrix with entry `(i, j) = k(points[i], points[j])`.
    ///
    /// Symmetry is enforced exactly: the upper triangle is computed once and
    /// mirrored. Designed-Mercer kernels assemble through the basis matrix,
    /// `K = E·diag(μ)·Eᵀ`.
    pub fn gram_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        if points.is_empty() {
            return Err(Error::EmptyPoints);
        }
        for &x in points {
            self.check_domain(x)?;
        }
        let n = points.len();
        let mut gram = match &self.family {
            KernelFamily::DesignedMercer(model) => {
                let basis = model.basis_matrix(points);
                let mut scaled = basis.clone();
                for i in 0..model.i_max() {
                    let mu = model.eigenvalues()[i];
                    scaled.column_mut(i).scale_mut(mu);
                }
                scaled * basis.transpose()
            }
            _ => {
                let mut k = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        k[(i, j)] = self.eval_scalar(points[i], points[j])?;
                    }
                }
                k
            }
        };
        for i in 0..n {
            for j in (i + 1)..n {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        Ok(gram)
    }

    /// Cross-evaluation vector with entry `i = k(points[i], x)`.
    pub fn cross_vector(&self, points: &[f64], x: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(points.len());
        for (i, &p) in points.iter().enumerate() {
            out[i] = self.eval_scalar(p, x)?;
        }
        Ok(out)
    }
}

/// The PSD output factor `B` of the operator-valued kernel `k·B`.
#[derive(Debug, Clone)]
pub enum OutputFactorSpec {
    Identity { dim: usize },
    Diagonal { entries: DVector<f64> },
    Dense { matrix: DMatrix<f64>, sqrt: DMatrix<f64> },
}

/// PSD tolerance for the dense constructor, relative to the largest entry.
const PSD_TOL: f64 = 1e-10;

impl OutputFactorSpec {
    pub fn identity(dim: usize) -> Self {
        OutputFactorSpec::Identity { dim }
    }

    pub fn diagonal(entries: DVector<f64>) -> Result<Self> {
        if entries.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::invalid("entries", "diagonal entries must be >= 0"));
        }
        Ok(OutputFactorSpec::Diagonal { entries })
    }

    /// Dense constructor: symmetrizes, then takes the PSD square root via the
    /// eigendecomposition. Rejects matrices with an eigenvalue below `-1e-10`
    /// (after symmetrization, relative to the spectral scale).
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eig = sym
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(Error::EigenFailure)?;
        let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
        let min_eigenvalue = eig.eigenvalues.min();
        if min_eigenvalue < -PSD_TOL * scale {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        let mut sqrt_diag = eig.eigenvalues.clone();
        for v in sqrt_diag.iter_mut() {
            *v = libm::sqrt(v.max(0.0));
        }
        let q = &eig.eigenvectors;
        let sqrt = q * DMatrix::from_diagonal(&sqrt_diag) * q.transpose();
        Ok(OutputFactorSpec::Dense { matrix: sym, sqrt })
    }

    pub fn dim(&self) -> usize {
        match self {
            OutputFactorSpec::Identity { dim } => *dim,
            OutputFactorSpec::Diagonal { entries } => entries.len(),
            OutputFactorSpec::Dense { matrix, .. } => matrix.nrows(),
        }
    }

    fn check_dim(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    /// `B^{1/2}·y` with the unique PSD square root; identity returns `y`.
    pub fn apply_sqrt(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(y)?;
        Ok(match self {
            OutputFactorSpec::Identity { .. } => y.clone(),
            OutputFactorSpec::Diagonal { entries } => {
                DVector::from_fn(y.len(), |i, _| libm::sqrt(entries[i]) * y[i])
            }
            OutputFactorSpec::Dense { sqrt, .. } => sqrt * y,
        })
    }

    /// `B·y`.
    pub fn apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(y)?;
        Ok(match self {
            OutputFactorSpec::Identity { .. } => y.clone(),
            OutputFactorSpec::Diagonal { entries } => {
                DVector::from_fn(y.len(), |i, _| entries[i] * y[i])
            }
            OutputFactorSpec::Dense { matrix, .. } => matrix * y,
        })
    }
}
