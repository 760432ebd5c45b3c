//! Mean-field dynamics of the empirical measure: the ODE `dx/dt = pi[x] - x`
//! whose unique stable point is the target, its Lyapunov function, and the
//! drift Jacobian at the target.

use nalgebra::DMatrix;

use super::AnalysisError;

fn validate_distribution(v: &[f64]) -> Result<(), AnalysisError> {
    if let Some(index) = v.iter().position(|&c| !c.is_finite() || c <= 0.0) {
        return Err(AnalysisError::BoundaryState { index });
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::NotNormalized { sum });
    }
    Ok(())
}

/// Normalized history-driven target `pi[x]_i ∝ mu_i (x_i/mu_i)^(-alpha)`
/// evaluated at a frozen measure `x` (log-space, overflow-safe).
pub fn history_target_distribution(mu: &[f64], alpha: f64, x: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = mu
        .iter()
        .zip(x)
        .map(|(&m, &c)| m.ln() - alpha * (c.ln() - m.ln()))
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// Drift `h(x) = pi[x] - x`.
pub fn drift(mu: &[f64], alpha: f64, x: &[f64]) -> Vec<f64> {
    history_target_distribution(mu, alpha, x)
        .iter()
        .zip(x)
        .map(|(p, c)| p - c)
        .collect()
}

/// Fixed-step classical Runge-Kutta integration of the mean-field ODE.
/// Returns the trajectory including the start point (`steps + 1` rows) and
/// fails if any component leaves the simplex interior.
pub fn ode_integrate(
    mu: &[f64],
    alpha: f64,
    x0: &[f64],
    step_size: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    validate_distribution(mu)?;
    validate_distribution(x0)?;
    if mu.len() != x0.len() {
        return Err(AnalysisError::DimensionMismatch {
            left: mu.len(),
            right: x0.len(),
        });
    }
    assert!(step_size > 0.0, "step size must be positive");

    let n = mu.len();
    let mut trajectory = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    trajectory.push(x.clone());
    let mut scratch = vec![0.0; n];

    for step in 1..=steps {
        let k1 = drift(mu, alpha, &x);
        for i in 0..n {
            scratch[i] = x[i] + 0.5 * step_size * k1[i];
        }
        interior(&scratch, step)?;
        let k2 = drift(mu, alpha, &scratch);
        for i in 0..n {
            scratch[i] = x[i] + 0.5 * step_size * k2[i];
        }
        interior(&scratch, step)?;
        let k3 = drift(mu, alpha, &scratch);
        for i in 0..n {
            scratch[i] = x[i] + step_size * k3[i];
        }
        interior(&scratch, step)?;
        let k4 = drift(mu, alpha, &scratch);
        for i in 0..n {
            x[i] += step_size / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        interior(&x, step)?;
        trajectory.push(x.clone());
    }
    Ok(trajectory)
}

fn interior(x: &[f64], step: usize) -> Result<(), AnalysisError> {
    if x.iter().all(|&c| c > 0.0 && c.is_finite()) {
        Ok(())
    } else {
        Err(AnalysisError::OdeLeftInterior { step })
    }
}

/// Lyapunov function `V(x) = sum_i mu_i (x_i/mu_i)^(-alpha)`; equals 1 at
/// `x = mu` and exceeds 1 everywhere else in the interior.
pub fn lyapunov(mu: &[f64], alpha: f64, x: &[f64]) -> f64 {
    mu.iter()
        .zip(x)
        .map(|(&m, &c)| m * (-alpha * (c.ln() - m.ln())).exp())
        .sum()
}

/// Outcome of checking Lyapunov descent along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovCheck {
    /// True when no step increased `V` by more than the allowed slack.
    pub monotone: bool,
    /// Largest single-step increase observed (0 when strictly decreasing).
    pub max_increase: f64,
    pub initial: f64,
    pub terminal: f64,
}

/// Verify `V` is non-increasing along an integrated trajectory, allowing
/// `slack` per step for discretization rounding.
pub fn lyapunov_descent_check(
    mu: &[f64],
    alpha: f64,
    trajectory: &[Vec<f64>],
    slack: f64,
) -> LyapunovCheck {
    let values: Vec<f64> = trajectory.iter().map(|x| lyapunov(mu, alpha, x)).collect();
    let mut max_increase: f64 = 0.0;
    for pair in values.windows(2) {
        max_increase = max_increase.max(pair[1] - pair[0]);
    }
    LyapunovCheck {
        monotone: max_increase <= slack,
        max_increase,
        initial: *values.first().unwrap_or(&f64::NAN),
        terminal: *values.last().unwrap_or(&f64::NAN),
    }
}

/// Drift Jacobian at the target: `alpha * mu 1^T - (alpha + 1) I`.
pub fn jacobian_at_mu(mu: &[f64], alpha: f64) -> DMatrix<f64> {
    let n = mu.len();
    DMatrix::from_fn(n, n, |i, j| {
        alpha * mu[i] - if i == j { alpha + 1.0 } else { 0.0 }
    })
}

/// Eigenvalues of the drift Jacobian at the target: `-1` once (eigenvector
/// `mu`) and `-(alpha+1)` with multiplicity `n-1` (the ones-orthogonal
/// complement). Both eigenrelations are verified numerically before
/// returning.
pub fn jacobian_eigenvalues(mu: &[f64], alpha: f64) -> Vec<f64> {
    let n = mu.len();
    let j = jacobian_at_mu(mu, alpha);

    // J mu = -mu
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|k| j[(i, k)] * mu[k]).sum();
        worst = worst.max((row + mu[i]).abs());
    }
    // J (e_k - e_0) = -(alpha+1)(e_k - e_0)
    for k in 1..n {
        for i in 0..n {
            let lhs = j[(i, k)] - j[(i, 0)];
            let rhs = -(alpha + 1.0)
                * (if i == k { 1.0 } else { 0.0 } - if i == 0 { 1.0 } else { 0.0 });
            worst = worst.max((lhs - rhs).abs());
        }
    }
    assert!(
        worst < 1e-9,
        "jacobian eigenrelation residual {worst} exceeds tolerance"
    );

    let mut eigenvalues = vec![-(alpha + 1.0); n];
    eigenvalues[0] = -1.0;
    eigenvalues.sort_by(f64::total_cmp);
    eigenvalues
}

/// Largest entrywise deviation between the analytic Jacobian at `mu` and a
/// central finite-difference Jacobian of the drift with perturbation `eps`.
pub fn jacobian_fd_check(mu: &[f64], alpha: f64, eps: f64) -> f64 {
    let n = mu.len();
    let analytic = jacobian_at_mu(mu, alpha);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut plus = mu.to_vec();
        let mut minus = mu.to_vec();
        plus[j] += eps;
        minus[j] -= eps;
        let hp = drift(mu, alpha, &plus);
        let hm = drift(mu, alpha, &minus);
        for i in 0..n {
            let fd = (hp[i] - hm[i]) / (2.0 * eps);
            worst = worst.max((fd - analytic[(i, j)]).abs());
        }
    }
    worst
}
