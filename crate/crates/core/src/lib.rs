//! Matrix-free curvature spectroscopy.
//!
//! Lanczos spectral densities for symmetric operators (including Hessians and
//! Gauss-Newton matrices of small models via exact Hessian-vector products),
//! random-matrix baselines, bulk and outlier estimators for finite-sample
//! spectra, and a learning-rate / momentum scheduler driven by the estimated
//! spectrum.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! bottom of this module fix the working precision used by the CLI.

pub mod bulk;
pub mod density;
pub mod error;
pub mod lanczos;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod optim;
pub mod rmt;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use density::{DiracMixture, KernelSpec, TraceEstimate};
pub use lanczos::{LanczosRun, RitzDecomposition, Tridiagonal};
pub use operator::{DenseSymmetric, SymmetricOperator};
pub use rng::{ProbeKind, SeedStream};

pub type Dense64 = DenseSymmetric<f64>;
pub type Dense32 = DenseSymmetric<f32>;
pub type Ritz64 = RitzDecomposition<f64>;
pub type Ritz32 = RitzDecomposition<f32>;
pub type Mixture64 = DiracMixture<f64>;
pub type Mixture32 = DiracMixture<f32>;
pub type Dataset64 = models::Dataset<f64>;
pub type LogReg64 = models::LogisticRegression<f64>;
pub type Mlp64 = models::Mlp<f64>;
pub type Schedule64 = optim::SpectralSchedule<f64>;
