//! Exact small-graph machinery: dense transition kernels, spectral
//! decomposition of reversible chains, closed-form limiting covariances,
//! the mean-field ODE with its Lyapunov function, and a Monte-Carlo
//! covariance estimator for everything the spectral formulas do not cover.

mod dynamics;
mod empirical;
mod kernels;
mod spectral;

pub use dynamics::{
    drift, history_target_distribution, jacobian_at_mu, jacobian_eigenvalues, jacobian_fd_check,
    lyapunov, lyapunov_descent_check, ode_integrate, LyapunovCheck,
};
pub use empirical::empirical_clt_covariance;
pub use kernels::{build_mh_kernel, build_srrw_kernel, KernelMatrix};
pub use spectral::{
    covariance_base, covariance_hdt, covariance_srrw, cost_scaled_comparison, min_eigenvalue,
    reversible_spectrum, CostComparison, SpectralReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("target entry {index} must be positive, got {value}")]
    NonPositiveTarget { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("state lies on the simplex boundary (component {index})")]
    BoundaryState { index: usize },
    #[error(
        "kernel is not reversible (residual {residual:.3e}); use the Monte-Carlo \
         covariance estimator instead"
    )]
    NotReversible { residual: f64 },
    #[error("eigenvalue 1 is repeated: the chain is reducible")]
    DisconnectedSpectrum,
    #[error("trajectory left the simplex interior at step {step}; reduce the step size")]
    OdeLeftInterior { step: usize },
    #[error("engine error: {0}")]
    Engine(String),
}
