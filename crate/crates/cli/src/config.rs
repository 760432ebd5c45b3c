//! Flat key-value configuration: a `key = value` file overridden by
//! command-line flags, resolved into an [`ExperimentConfig`] plus the
//! CLI-level extras (label settings, truth choice).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use hdt_core::engine::{EstimatorSpec, ExperimentConfig, FakeCountMode, InitialStateMode};
use hdt_core::metrics::assign_labels;
use hdt_core::rng::{stream, StreamDomain};
use hdt_core::samplers::{BalanceFunction, MtmConfig, SamplerKind};
use hdt_core::target::TargetWeights;
use hdt_core::Graph;

use crate::CliError;

/// Which ground truth NRMSE is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthChoice {
    /// Plain estimator against the target-weighted truth.
    Target,
    /// Importance-reweighted estimator against the uniform average.
    Uniform,
}

impl std::str::FromStr for TruthChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "target" => Ok(TruthChoice::Target),
            "uniform" => Ok(TruthChoice::Uniform),
            other => Err(format!("unknown truth choice {other:?} (expected target|uniform)")),
        }
    }
}

/// Merged key-value view: config file first, flags override.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(CliError::Config(format!(
                    "config line {}: expected 'key = value', got {trimmed:?}",
                    lineno + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KeyValues { entries })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Config(format!("invalid {key} = {raw:?}: {e}"))),
        }
    }

}

pub fn parse_target(spec: &str, graph: &Graph) -> Result<TargetWeights, CliError> {
    match spec {
        "uniform" => Ok(TargetWeights::Uniform),
        "degree" => Ok(TargetWeights::Degree),
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let file = fs::File::open(path)
                    .map_err(|e| CliError::Data(format!("cannot open weights {path}: {e}")))?;
                TargetWeights::from_weight_file(std::io::BufReader::new(file), graph)
                    .map_err(|e| CliError::Data(e.to_string()))
            }
            None => Err(CliError::Config(format!(
                "unknown target {other:?} (expected uniform|degree|file:<path>)"
            ))),
        },
    }
}

fn parse_init(spec: &str) -> Result<InitialStateMode, CliError> {
    match spec {
        "low_degree" => Ok(InitialStateMode::LowDegree),
        "high_degree" => Ok(InitialStateMode::HighDegree),
        "uniform_random" => Ok(InitialStateMode::UniformRandom),
        other => match other.strip_prefix("fixed:") {
            Some(n) => n
                .parse::<usize>()
                .map(InitialStateMode::Fixed)
                .map_err(|e| CliError::Config(format!("invalid init {other:?}: {e}"))),
            None => Err(CliError::Config(format!(
                "unknown init {other:?} (expected fixed:<node>|low_degree|high_degree|uniform_random)"
            ))),
        },
    }
}

/// Resolve the experiment configuration for `run`/`budget` against a graph.
/// Also returns the label assignment settings used for NRMSE.
pub fn build_experiment(
    kv: &KeyValues,
    graph: &Graph,
) -> Result<ExperimentConfig, CliError> {
    let sampler: SamplerKind = kv
        .parsed("sampler")?
        .ok_or_else(|| CliError::Config("sampler is required".into()))?;
    let alpha: f64 = kv.parsed("alpha")?.unwrap_or(0.0);
    let weights = parse_target(kv.get("target").unwrap_or("uniform"), graph)?;

    let total_steps: Option<u64> = kv.parsed("total_steps")?;
    let budget: Option<f64> = kv.parsed("budget")?;

    let mut config = ExperimentConfig::step_run(sampler, alpha, weights, 1);
    config.total_steps = total_steps;
    config.budget = budget;
    if budget.is_some() {
        config.burn_in_fraction = 0.0;
    }
    if let Some(b) = kv.parsed::<f64>("burn_in_fraction")? {
        config.burn_in_fraction = b;
    }
    if let Some(mode) = kv.parsed::<FakeCountMode>("fake_counts")? {
        config.fake_counts = mode;
    }
    config.lru_ratio = kv.parsed("lru_ratio")?;
    if let Some(init) = kv.get("init") {
        config.initial_state = parse_init(init)?;
    }
    if let Some(r) = kv.parsed("replications")? {
        config.replications = r;
    }
    if let Some(s) = kv.parsed("seed")? {
        config.base_seed = s;
    }
    config.snapshot_stride = kv.parsed("snapshot_stride")?;

    let mtm_k: Option<usize> = kv.parsed("mtm_k")?;
    let mtm_h: Option<BalanceFunction> = kv.parsed("mtm_h")?;
    config.mtm = match (mtm_k, mtm_h) {
        (None, None) => None,
        (k, h) => Some(
            MtmConfig::new(k.unwrap_or(3), h.unwrap_or(BalanceFunction::Sqrt))
                .map_err(CliError::Config)?,
        ),
    };

    config.estimator = Some(build_estimator(kv, graph, &config)?);
    Ok(config)
}

/// Label-density estimator: labels come from a file when `labels_file` is
/// set, otherwise from a Bernoulli(`label_p`) draw on the experiment-wide
/// label stream of `seed`.
fn build_estimator(
    kv: &KeyValues,
    graph: &Graph,
    config: &ExperimentConfig,
) -> Result<EstimatorSpec, CliError> {
    let labels = match kv.get("labels_file") {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| CliError::Data(format!("cannot open labels {path}: {e}")))?;
            hdt_core::LabelAssignment::read(graph, std::io::BufReader::new(file))
                .map_err(|e| CliError::Data(e.to_string()))?
        }
        None => {
            let p: f64 = kv.parsed("label_p")?.unwrap_or(0.3);
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Config(format!("label_p must lie in [0,1], got {p}")));
            }
            let mut rng = stream(config.base_seed, 0, StreamDomain::Labels);
            assign_labels(graph, p, &mut rng)
        }
    };

    let truth_choice: Option<TruthChoice> = kv.parsed("truth")?;
    let uniform_target = config.weights.is_uniform();
    let choice = match (truth_choice, uniform_target) {
        (Some(c), _) => c,
        (None, true) => TruthChoice::Target,
        (None, false) => {
            return Err(CliError::Config(
                "non-uniform target: choose the nrmse baseline with truth = target|uniform".into(),
            ))
        }
    };
    let (truth, reweight) = match choice {
        TruthChoice::Target => {
            let mu = config.weights.normalized(graph);
            (
                labels
                    .weighted_truth(&mu)
                    .map_err(|e| CliError::Config(e.to_string()))?,
                false,
            )
        }
        TruthChoice::Uniform => (labels.uniform_truth(), !uniform_target),
    };
    if truth == 0.0 {
        return Err(CliError::Config(
            "label truth is 0; nrmse is undefined (adjust label_p or labels_file)".into(),
        ));
    }
    Ok(EstimatorSpec {
        values: Arc::new(labels.indicator_vector()),
        truth,
        reweight,
    })
}
