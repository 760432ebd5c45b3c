//! Eigendecomposition of reversible kernels and the closed-form limiting
//! covariances of the empirical measure.
//!
//! For a reversible `P` with target `mu` and eigenpairs `(lambda_i, u_i,
//! v_i)` (left/right, `u_1 = mu`, `v_1 = 1`, `u_i^T v_j = delta_ij`), the
//! base sampler's scaled empirical-measure error has limiting covariance
//!
//! ```text
//! V_base         = sum_{i>=2} (1+lambda_i)/(1-lambda_i) u_i u_i^T
//! V_hdt(alpha)   = V_base / (2 alpha + 1)
//! V_srrw(alpha)  = sum_{i>=2} [2 alpha (lambda_i+1) + 1]^{-1}
//!                  (1+lambda_i)/(1-lambda_i) u_i u_i^T
//! ```
//!
//! The decomposition runs on the symmetrized form `D^{1/2} P D^{-1/2}`,
//! which shares eigenvalues with `P` and has an orthonormal basis `w_i`
//! from which `u_i = D^{1/2} w_i` and `v_i = D^{-1/2} w_i` are recovered.

use nalgebra::{DMatrix, DVector};

use super::kernels::KernelMatrix;
use super::AnalysisError;
use crate::graph::Graph;

/// Sorted eigenpairs of a reversible kernel, normalized for covariance work.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Eigenvalues in descending order; `eigenvalues[0] = 1`.
    pub eigenvalues: Vec<f64>,
    /// Left eigenvectors as columns; column 0 approximates `mu`.
    pub left: DMatrix<f64>,
    /// Right eigenvectors as columns; column 0 approximates the ones vector.
    pub right: DMatrix<f64>,
    /// The kernel's target distribution.
    pub target: Vec<f64>,
}

impl SpectralReport {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest `|u_i^T v_j|` over `i != j` (biorthogonality residual).
    pub fn biorthogonality_residual(&self) -> f64 {
        let gram = self.left.transpose() * &self.right;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - expected).abs());
            }
        }
        worst
    }
}

const REVERSIBILITY_TOLERANCE: f64 = 1e-10;

/// Eigendecompose a reversible kernel. Fails when the kernel is not
/// reversible against its own target (non-reversible chains have no such
/// decomposition here; estimate their covariance by Monte Carlo instead).
pub fn reversible_spectrum(kernel: &KernelMatrix) -> Result<SpectralReport, AnalysisError> {
    let residual = kernel.reversibility_residual();
    if residual > REVERSIBILITY_TOLERANCE {
        return Err(AnalysisError::NotReversible { residual });
    }
    let n = kernel.dim();
    let target = kernel.target.clone();
    let sqrt: Vec<f64> = target.iter().map(|m| m.sqrt()).collect();

    let mut sym = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = sqrt[i] * kernel.matrix[(i, j)] / sqrt[j];
        }
    }
    // kill rounding asymmetry before the symmetric solver
    let sym = (&sym + sym.transpose()) * 0.5;

    let eigen = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut left = DMatrix::zeros(n, n);
    let mut right = DMatrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        eigenvalues.push(eigen.eigenvalues[idx]);
        let w = eigen.eigenvectors.column(idx);
        let mut u = DVector::zeros(n);
        let mut v = DVector::zeros(n);
        for i in 0..n {
            u[i] = sqrt[i] * w[i];
            v[i] = w[i] / sqrt[i];
        }
        // deterministic sign: first non-negligible component of v positive
        if let Some(lead) = v.iter().find(|c| c.abs() > 1e-12) {
            if *lead < 0.0 {
                u.neg_mut();
                v.neg_mut();
            }
        }
        left.set_column(col, &u);
        right.set_column(col, &v);
    }
    Ok(SpectralReport {
        eigenvalues,
        left,
        right,
        target,
    })
}

fn check_spectral_gap(report: &SpectralReport) -> Result<(), AnalysisError> {
    if report.dim() > 1 && report.eigenvalues[1] > 1.0 - 1e-9 {
        return Err(AnalysisError::DisconnectedSpectrum);
    }
    Ok(())
}

fn covariance_sum<F: Fn(f64) -> f64>(report: &SpectralReport, factor: F) -> DMatrix<f64> {
    let n = report.dim();
    let mut v = DMatrix::zeros(n, n);
    for i in 1..n {
        let u = report.left.column(i);
        let c = factor(report.eigenvalues[i]);
        v += c * u * u.transpose();
    }
    // exact symmetry for downstream eigenvalue checks
    (&v + v.transpose()) * 0.5
}

/// Limiting covariance of the base reversible sampler's scaled
/// empirical-measure error.
pub fn covariance_base(report: &SpectralReport) -> Result<DMatrix<f64>, AnalysisError> {
    check_spectral_gap(report)?;
    Ok(covariance_sum(report, |l| (1.0 + l) / (1.0 - l)))
}

/// History-driven covariance: the base covariance shrunk by `2 alpha + 1`.
pub fn covariance_hdt(v_base: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    assert!(alpha >= 0.0, "alpha must be nonnegative");
    v_base / (2.0 * alpha + 1.0)
}

/// Self-repellent walk covariance with mode-dependent shrinkage.
pub fn covariance_srrw(
    report: &SpectralReport,
    alpha: f64,
) -> Result<DMatrix<f64>, AnalysisError> {
    assert!(alpha >= 0.0, "alpha must be nonnegative");
    check_spectral_gap(report)?;
    Ok(covariance_sum(report, |l| {
        (1.0 + l) / (1.0 - l) / (2.0 * alpha * (l + 1.0) + 1.0)
    }))
}

/// Smallest eigenvalue of a symmetric matrix (symmetrized defensively).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Cost-scaled covariance comparison between the history-driven sampler
/// (2 units per step) and the self-repellent walk (2 units per member of
/// the expanded neighborhood, averaged under `mu`).
#[derive(Debug, Clone)]
pub struct CostComparison {
    /// `E_mu[|N(i)| + 1]`.
    pub expected_neighborhood: f64,
    pub hdt_cost: f64,
    pub srrw_cost: f64,
    pub hdt_scaled: DMatrix<f64>,
    /// `(2 / E_mu[|N|]) * srrw_cost * V_srrw`.
    pub srrw_scaled: DMatrix<f64>,
    /// Smallest eigenvalue of `srrw_scaled - hdt_scaled`; nonnegative up to
    /// rounding when the cost-scaled ordering holds.
    pub min_eigenvalue: f64,
}

pub fn cost_scaled_comparison(
    report: &SpectralReport,
    graph: &Graph,
    mu: &[f64],
    alpha: f64,
) -> Result<CostComparison, AnalysisError> {
    if mu.len() != graph.node_count() {
        return Err(AnalysisError::DimensionMismatch {
            left: mu.len(),
            right: graph.node_count(),
        });
    }
    let total: f64 = mu.iter().sum();
    let expected_neighborhood: f64 = graph
        .nodes()
        .map(|i| mu[i.index()] / total * graph.expanded_degree(i) as f64)
        .sum();
    let hdt_cost = 2.0;
    let srrw_cost = 2.0 * expected_neighborhood;

    let v_base = covariance_base(report)?;
    let hdt_scaled = covariance_hdt(&v_base, alpha) * hdt_cost;
    let srrw_scaled =
        covariance_srrw(report, alpha)? * (srrw_cost * 2.0 / expected_neighborhood);
    let min = min_eigenvalue(&(&srrw_scaled - &hdt_scaled));
    Ok(CostComparison {
        expected_neighborhood,
        hdt_cost,
        srrw_cost,
        hdt_scaled,
        srrw_scaled,
        min_eigenvalue: min,
    })
}
