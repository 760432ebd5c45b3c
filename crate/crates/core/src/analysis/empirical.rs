//! Monte-Carlo estimate of the limiting covariance of the scaled
//! empirical-measure error, for validating the closed-form expressions and
//! for samplers with no spectral formula (non-reversible chains).

use nalgebra::{DMatrix, DVector};

use super::AnalysisError;
use crate::engine::{run_replicated, ExperimentConfig};
use crate::graph::Graph;

/// Sample second moment of `sqrt(n) (x_n - mu)` over independent chains.
///
/// The measure is the full-trajectory empirical measure (burn-in is forced
/// to zero regardless of the config), matching the quantity the CLT scales;
/// `config.total_steps` is the horizon `n` and `config.replications` the
/// number of chains.
pub fn empirical_clt_covariance(
    config: &ExperimentConfig,
    graph: &Graph,
) -> Result<DMatrix<f64>, AnalysisError> {
    let n = config
        .total_steps
        .ok_or_else(|| AnalysisError::Engine("total_steps required".to_string()))? as f64;
    let mut cfg = config.clone();
    cfg.burn_in_fraction = 0.0;
    let rep = run_replicated(&cfg, graph).map_err(|e| AnalysisError::Engine(e.to_string()))?;

    let mu = cfg.weights.normalized(graph);
    let dim = graph.node_count();
    let scale = n.sqrt();
    let mut v = DMatrix::zeros(dim, dim);
    for run in &rep.runs {
        let z = DVector::from_fn(dim, |i, _| scale * (run.final_measure[i] - mu[i]));
        v += &z * z.transpose();
    }
    Ok(v / rep.runs.len() as f64)
}
