//! Vector-valued kernel ridge regression with operator-valued kernels of the
//! form `k(x,x')·B`, designed Mercer spectra with exactly known eigenvalues,
//! interpolation-space (γ-norm) error evaluation, and a seeded experiment
//! harness for measuring empirical learning-rate exponents.
//!
//! The crate is `no_std` + `alloc`; all IO lives in the companion CLI crate.
//!
//! Module map:
//! - [`kernel`]: scalar kernels (designed Mercer, Gaussian, Laplacian,
//!   half-integer Matérn), Gram assembly, and the PSD output factor `B`.
//! - [`spectral`]: designed spectra, γ-norms, effective dimension,
//!   embedding constants, Nyström spectrum estimation.
//! - [`estimator`]: the regularized least-squares solver and a feature-space
//!   ridge oracle for representer verification.
//! - [`synth`]: targets with certified source-condition smoothness, noise
//!   models with certified moment bounds, i.i.d. sampling.
//! - [`analysis`]: exact γ-norm errors, the closed-form bias oracle,
//!   regularization schedules, learning-rate slope fitting.
//! - [`lowerbound`]: scalar projection, rank-one Gaussian conditionals, and
//!   the KL identity used by the minimax lower-bound reduction.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod lowerbound;
pub mod rng;
pub mod spectral;
pub mod synth;

mod util;

pub use error::Error;
pub use util::median;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
