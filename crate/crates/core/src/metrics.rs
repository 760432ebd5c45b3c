//! Convergence and estimation metrics: total variation distance, MCMC
//! estimators (plain and importance-reweighted), NRMSE, and Bernoulli label
//! assignments for group-size estimation.

use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, NodeId};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("probability vector sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("empty sample sequence")]
    EmptySamples,
    #[error("nrmse is undefined for truth = 0")]
    ZeroTruth,
    #[error("label file line {line}: {message}")]
    LabelFile { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Total variation distance: half the L1 distance between two probability
/// vectors of the same dimension.
pub fn tvd(x: &[f64], mu: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != mu.len() {
        return Err(MetricsError::DimensionMismatch {
            left: x.len(),
            right: mu.len(),
        });
    }
    for v in [x, mu] {
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricsError::NotNormalized { sum });
        }
    }
    Ok(0.5 * x.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Empirical measure of a sample sequence over `node_count` states.
pub fn empirical_measure(samples: &[NodeId], node_count: usize) -> Result<Vec<f64>, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let mut counts = vec![0.0; node_count];
    for &s in samples {
        counts[s.index()] += 1.0;
    }
    let n = samples.len() as f64;
    for c in &mut counts {
        *c /= n;
    }
    Ok(counts)
}

/// Plain MCMC estimator: the arithmetic mean of `f` along the samples,
/// identical to the `f`-weighted empirical measure.
pub fn estimator<F: Fn(NodeId) -> f64>(samples: &[NodeId], f: F) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    Ok(samples.iter().map(|&s| f(s)).sum::<f64>() / samples.len() as f64)
}

/// Self-normalized importance-reweighted estimator of the uniform average
/// of `f` from a chain targeting `mu_tilde`:
/// `sum f(X_s)/mu_tilde(X_s) / sum 1/mu_tilde(X_s)`.
pub fn is_estimator<F, W>(samples: &[NodeId], f: F, mu_tilde: W) -> Result<f64, MetricsError>
where
    F: Fn(NodeId) -> f64,
    W: Fn(NodeId) -> f64,
{
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for &s in samples {
        let w = 1.0 / mu_tilde(s);
        numerator += f(s) * w;
        denominator += w;
    }
    Ok(numerator / denominator)
}

/// Normalized root mean squared error of per-run estimates against a known
/// truth: `sqrt(mean((est - truth)^2)) / truth`.
pub fn nrmse(estimates: &[f64], truth: f64) -> Result<f64, MetricsError> {
    if estimates.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    if truth == 0.0 {
        return Err(MetricsError::ZeroTruth);
    }
    let mse = estimates
        .iter()
        .map(|e| (e - truth) * (e - truth))
        .sum::<f64>()
        / estimates.len() as f64;
    Ok(mse.sqrt() / truth.abs())
}

/// Per-node 0/1 labels for group-size estimation.
#[derive(Debug, Clone)]
pub struct LabelAssignment {
    labels: Vec<bool>,
    assignment_probability: f64,
}

impl LabelAssignment {
    pub fn label(&self, i: NodeId) -> bool {
        self.labels[i.index()]
    }

    pub fn indicator(&self, i: NodeId) -> f64 {
        if self.labels[i.index()] {
            1.0
        } else {
            0.0
        }
    }

    pub fn indicator_vector(&self) -> Vec<f64> {
        self.labels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn assignment_probability(&self) -> f64 {
        self.assignment_probability
    }

    pub fn ones(&self) -> usize {
        self.labels.iter().filter(|&&b| b).count()
    }

    /// Count-based truth `|S1| / |X|` (uniform average of the indicator).
    pub fn uniform_truth(&self) -> f64 {
        self.ones() as f64 / self.labels.len() as f64
    }

    /// `sum_i mu_i f(i)` under a normalized target `mu`.
    pub fn weighted_truth(&self, mu: &[f64]) -> Result<f64, MetricsError> {
        if mu.len() != self.labels.len() {
            return Err(MetricsError::DimensionMismatch {
                left: mu.len(),
                right: self.labels.len(),
            });
        }
        Ok(self
            .labels
            .iter()
            .zip(mu)
            .filter(|(&b, _)| b)
            .map(|(_, &m)| m)
            .sum())
    }

    /// Export as `<node> <label>` lines keyed by original node labels.
    pub fn write<W: Write>(&self, graph: &Graph, mut out: W) -> Result<(), MetricsError> {
        for i in graph.nodes() {
            writeln!(
                out,
                "{} {}",
                graph.original_label(i),
                u8::from(self.labels[i.index()])
            )?;
        }
        Ok(())
    }

    /// Load from `<node> <label>` lines keyed by original node labels.
    pub fn read<R: BufRead>(graph: &Graph, source: R) -> Result<Self, MetricsError> {
        let mut labels = vec![None; graph.node_count()];
        for (lineno, line) in source.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tok = trimmed.split_whitespace();
            let (a, b) = match (tok.next(), tok.next(), tok.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(MetricsError::LabelFile {
                        line: lineno + 1,
                        message: format!("expected '<node> <label>', got {trimmed:?}"),
                    })
                }
            };
            let label: u64 = a.parse().map_err(|_| MetricsError::LabelFile {
                line: lineno + 1,
                message: format!("invalid node label {a:?}"),
            })?;
            let bit = match b {
                "0" => false,
                "1" => true,
                other => {
                    return Err(MetricsError::LabelFile {
                        line: lineno + 1,
                        message: format!("labels must be 0 or 1, got {other:?}"),
                    })
                }
            };
            let node = graph.find_original(label).ok_or(MetricsError::LabelFile {
                line: lineno + 1,
                message: format!("unknown node label {label}"),
            })?;
            labels[node.index()] = Some(bit);
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or(MetricsError::LabelFile {
                    line: 0,
                    message: format!(
                        "no label for node with original id {}",
                        graph.original_label(NodeId(i as u32))
                    ),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LabelAssignment {
            labels,
            assignment_probability: f64::NAN,
        })
    }
}

/// Independent Bernoulli(`p`) label per node.
pub fn assign_labels<R: Rng>(graph: &Graph, p: f64, rng: &mut R) -> LabelAssignment {
    assert!((0.0..=1.0).contains(&p), "label probability must be in [0,1]");
    let labels = (0..graph.node_count())
        .map(|_| rng.random::<f64>() < p)
        .collect();
    LabelAssignment {
        labels,
        assignment_probability: p,
    }
}
