//! Dense transition kernels for small graphs.

use nalgebra::DMatrix;

use super::AnalysisError;
use crate::graph::Graph;

/// Row-stochastic transition matrix together with the distribution it
/// targets. Entry `(i, j)` is nonzero only for `j` in the expanded
/// neighborhood of `i`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub matrix: DMatrix<f64>,
    pub target: Vec<f64>,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.matrix.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest detailed-balance violation `|t_i P_ij - t_j P_ji|` against
    /// the kernel's own target.
    pub fn reversibility_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let flow = self.target[i] * self.matrix[(i, j)]
                    - self.target[j] * self.matrix[(j, i)];
                worst = worst.max(flow.abs());
            }
        }
        worst
    }
}

fn validate_target(graph: &Graph, mu: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if mu.len() != graph.node_count() {
        return Err(AnalysisError::DimensionMismatch {
            left: mu.len(),
            right: graph.node_count(),
        });
    }
    for (i, &m) in mu.iter().enumerate() {
        if !m.is_finite() || m <= 0.0 {
            return Err(AnalysisError::NonPositiveTarget { index: i, value: m });
        }
    }
    let total: f64 = mu.iter().sum();
    Ok(mu.iter().map(|m| m / total).collect())
}

/// Metropolis-Hastings kernel on `mu` with uniform proposal over neighbors:
/// `P_ij = (1/d_i) min{1, (mu_j/mu_i)(d_i/d_j)}` off-diagonal, with the
/// rejected mass on the diagonal. Reversible w.r.t. `mu` by construction.
pub fn build_mh_kernel(graph: &Graph, mu: &[f64]) -> Result<KernelMatrix, AnalysisError> {
    let target = validate_target(graph, mu)?;
    let n = graph.node_count();
    let mut matrix = DMatrix::zeros(n, n);
    for i in graph.nodes() {
        let di = graph.degree(i) as f64;
        let mut stay = 1.0;
        for &j in graph.neighbors(i) {
            let dj = graph.degree(j) as f64;
            let acc = (target[j.index()] / target[i.index()] * di / dj).min(1.0);
            let p = acc / di;
            matrix[(i.index(), j.index())] = p;
            stay -= p;
        }
        matrix[(i.index(), i.index())] = stay.max(0.0);
    }
    Ok(KernelMatrix { matrix, target })
}

/// Self-repellent kernel at a frozen empirical measure `x`: the base MH row
/// on `mu` reweighted entrywise by `(x_j/mu_j)^(-alpha)` and renormalized,
/// together with the distribution it is reversible against,
/// `pi_i ∝ mu_i (x_i/mu_i)^(-alpha) * sum_j P_ij (x_j/mu_j)^(-alpha)`.
pub fn build_srrw_kernel(
    graph: &Graph,
    mu: &[f64],
    x: &[f64],
    alpha: f64,
) -> Result<(KernelMatrix, Vec<f64>), AnalysisError> {
    let base = build_mh_kernel(graph, mu)?;
    let target = base.target.clone();
    if x.len() != target.len() {
        return Err(AnalysisError::DimensionMismatch {
            left: x.len(),
            right: target.len(),
        });
    }
    if let Some(index) = x.iter().position(|&v| !v.is_finite() || v <= 0.0) {
        return Err(AnalysisError::BoundaryState { index });
    }

    let n = graph.node_count();
    let repel: Vec<f64> = (0..n)
        .map(|i| (-alpha * (x[i] / target[i]).ln()).exp())
        .collect();

    let mut matrix = DMatrix::zeros(n, n);
    let mut stationary = vec![0.0; n];
    for i in 0..n {
        let mut z = 0.0;
        for j in 0..n {
            let w = base.matrix[(i, j)] * repel[j];
            matrix[(i, j)] = w;
            z += w;
        }
        for j in 0..n {
            matrix[(i, j)] /= z;
        }
        stationary[i] = target[i] * repel[i] * z;
    }
    let total: f64 = stationary.iter().sum();
    for s in &mut stationary {
        *s /= total;
    }
    Ok((
        KernelMatrix {
            matrix,
            target: stationary.clone(),
        },
        stationary,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;
    use std::io::Cursor;

    fn triangle() -> Graph {
        load_edge_list(Cursor::new("0 1\n1 2\n2 0\n"), true).unwrap()
    }

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn triangle_kernel() {
        let g = triangle();
        let k = build_mh_kernel(&g, &uniform(3)).unwrap();
        for i in 0..3 {
            assert!(k.matrix[(i, i)].abs() < 1e-15);
            for j in 0..3 {
                if i != j {
                    assert!((k.matrix[(i, j)] - 0.5).abs() < 1e-15);
                }
            }
        }
        assert!(k.row_sum_residual() < 1e-12);
        assert!(k.reversibility_residual() < 1e-15);
    }

    #[test]
    fn two_node_path_kernel() {
        let g = load_edge_list(Cursor::new("0 1\n"), true).unwrap();
        let k = build_mh_kernel(&g, &uniform(2)).unwrap();
        assert_eq!(k.matrix[(0, 1)], 1.0);
        assert_eq!(k.matrix[(1, 0)], 1.0);
        assert_eq!(k.matrix[(0, 0)], 0.0);
    }

    #[test]
    fn star_kernel_entries() {
        let g = load_edge_list(Cursor::new("0 1\n0 2\n0 3\n0 4\n0 5\n"), true).unwrap();
        let k = build_mh_kernel(&g, &uniform(6)).unwrap();
        let c = 0usize;
        for leaf in 1..6 {
            assert!((k.matrix[(c, leaf)] - 0.2).abs() < 1e-15);
            assert!((k.matrix[(leaf, c)] - 0.2).abs() < 1e-15);
            assert!((k.matrix[(leaf, leaf)] - 0.8).abs() < 1e-15);
        }
        assert!(k.matrix[(c, c)].abs() < 1e-15);
        assert!(k.reversibility_residual() < 1e-15);
    }

    #[test]
    fn kernel_rejects_zero_target() {
        let g = triangle();
        assert!(build_mh_kernel(&g, &[0.5, 0.5, 0.0]).is_err());
        assert!(build_mh_kernel(&g, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn srrw_alpha_zero_is_base() {
        let g = triangle();
        let mu = uniform(3);
        let base = build_mh_kernel(&g, &mu).unwrap();
        let (k, pi) = build_srrw_kernel(&g, &mu, &[0.5, 0.3, 0.2], 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.matrix[(i, j)] - base.matrix[(i, j)]).abs() < 1e-15);
            }
            assert!((pi[i] - mu[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn srrw_fixed_point_x_equals_mu() {
        let g = triangle();
        let mu = vec![0.5, 0.25, 0.25];
        let base = build_mh_kernel(&g, &mu).unwrap();
        let (k, pi) = build_srrw_kernel(&g, &mu, &mu, 3.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.matrix[(i, j)] - base.matrix[(i, j)]).abs() < 1e-14);
            }
            assert!((pi[i] - mu[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn srrw_triangle_detailed_balance() {
        let g = triangle();
        let (k, pi) = build_srrw_kernel(&g, &uniform(3), &[0.5, 0.25, 0.25], 1.0).unwrap();
        assert!(k.row_sum_residual() < 1e-12);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((pi[i] * k.matrix[(i, j)] - pi[j] * k.matrix[(j, i)]).abs());
            }
        }
        assert!(worst < 1e-12, "detailed balance residual {worst}");
    }

    #[test]
    fn srrw_rejects_boundary_x() {
        let g = triangle();
        assert!(build_srrw_kernel(&g, &uniform(3), &[0.5, 0.5, 0.0], 1.0).is_err());
    }
}
