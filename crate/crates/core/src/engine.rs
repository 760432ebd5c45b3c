//! End-to-end chain execution: step the sampler, feed accepted samples back
//! into the visit history, accumulate the post-burn-in empirical measure,
//! snapshot metrics, and replicate across seeds.
//!
//! Visit counts driving the history-driven oracle accumulate from step 0,
//! burn-in included (the oracle needs history from the first step); the
//! metric empirical measure only collects post-burn-in samples. Budget runs
//! stop after the last step that fits, so the realized cost never exceeds
//! the budget.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};
use crate::metrics::{self, MetricsError};
use crate::rng::{stream, ChainRngs, StreamDomain};
use crate::samplers::{
    mh_step, mhda_step, mtm_step, srrw_step, step_cost, two_cycle_step, ChainState, MtmConfig,
    PlainOracle, SamplerKind, StepOutcome, TargetOracle,
};
use crate::target::{
    CountStore, DefaultCounts, HistoryTarget, LruVisitStore, TargetError, TargetWeights,
    VisitStore,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Initial fake visit counts keeping the history-driven target well defined
/// from step 0.
///
/// The non-uniform scenarios carry probability-scale mass (the per-node
/// prior sums to 1 over the graph), so a single real visit dominates the
/// prior at any node. Degree-valued priors of unit scale would instead
/// stall the walker for about `d^(4/5)` steps at every fresh low-degree
/// node, visibly distorting the empirical measure at sampling horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakeCountMode {
    /// Count 1 for every node.
    Unif,
    /// Count proportional to the node degree, total mass 1.
    Deg,
    /// Dirichlet(0.5) draw (a probability vector).
    NonUnif,
}

impl FakeCountMode {
    pub fn name(self) -> &'static str {
        match self {
            FakeCountMode::Unif => "unif",
            FakeCountMode::Deg => "deg",
            FakeCountMode::NonUnif => "non_unif",
        }
    }
}

impl std::str::FromStr for FakeCountMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unif" => Ok(FakeCountMode::Unif),
            "deg" => Ok(FakeCountMode::Deg),
            "non_unif" => Ok(FakeCountMode::NonUnif),
            other => Err(format!(
                "unknown fake-count mode {other:?} (expected unif|deg|non_unif)"
            )),
        }
    }
}

/// How the walker's start node is chosen, per replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialStateMode {
    Fixed(usize),
    /// Uniform among nodes with degree below the average degree.
    LowDegree,
    /// Uniform among nodes with degree at or above the average degree.
    HighDegree,
    UniformRandom,
}

impl InitialStateMode {
    pub fn describe(self) -> String {
        match self {
            InitialStateMode::Fixed(n) => format!("fixed:{n}"),
            InitialStateMode::LowDegree => "low_degree".to_string(),
            InitialStateMode::HighDegree => "high_degree".to_string(),
            InitialStateMode::UniformRandom => "uniform_random".to_string(),
        }
    }
}

/// Test function, ground truth, and estimator flavor for NRMSE curves.
#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    /// Per-node values of the test function.
    pub values: Arc<Vec<f64>>,
    pub truth: f64,
    /// Self-normalized importance reweighting by `1/mu_tilde` (estimates the
    /// uniform average while the chain targets `mu`).
    pub reweight: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sampler: SamplerKind,
    pub alpha: f64,
    pub weights: TargetWeights,
    pub mtm: Option<MtmConfig>,
    pub total_steps: Option<u64>,
    pub budget: Option<f64>,
    /// Fraction of the run (steps, or cost units for budget runs) excluded
    /// from metric accumulation.
    pub burn_in_fraction: f64,
    pub fake_counts: FakeCountMode,
    pub lru_ratio: Option<f64>,
    pub initial_state: InitialStateMode,
    pub replications: u32,
    pub base_seed: u64,
    /// Snapshot spacing in steps (step runs) or cost units (budget runs);
    /// defaults to a 100-point grid.
    pub snapshot_stride: Option<f64>,
    pub estimator: Option<EstimatorSpec>,
}

impl ExperimentConfig {
    /// Step-count run with the experiment defaults: one third burn-in,
    /// uniform fake counts, uniform-random start.
    pub fn step_run(sampler: SamplerKind, alpha: f64, weights: TargetWeights, steps: u64) -> Self {
        ExperimentConfig {
            sampler,
            alpha,
            weights,
            mtm: None,
            total_steps: Some(steps),
            budget: None,
            burn_in_fraction: 1.0 / 3.0,
            fake_counts: FakeCountMode::Unif,
            lru_ratio: None,
            initial_state: InitialStateMode::UniformRandom,
            replications: 1,
            base_seed: 0,
            snapshot_stride: None,
            estimator: None,
        }
    }

    /// Budget run; burn-in defaults to none.
    pub fn budget_run(
        sampler: SamplerKind,
        alpha: f64,
        weights: TargetWeights,
        budget: f64,
    ) -> Self {
        let mut cfg = Self::step_run(sampler, alpha, weights, 0);
        cfg.total_steps = None;
        cfg.budget = Some(budget);
        cfg.burn_in_fraction = 0.0;
        cfg
    }

    pub fn validate(&self, graph: &Graph) -> Result<(), EngineError> {
        let err = |m: String| Err(EngineError::Config(m));
        match (self.total_steps, self.budget) {
            (None, None) => return err("set either total_steps or budget".into()),
            (Some(_), Some(_)) => {
                return err("total_steps and budget are mutually exclusive".into())
            }
            (Some(0), None) => return err("total_steps must be at least 1".into()),
            (None, Some(b)) if b.is_nan() || b <= 0.0 => {
                return err(format!("budget must be positive: {b}"))
            }
            _ => {}
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return err(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return err(format!(
                "burn_in_fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            ));
        }
        if self.replications < 1 {
            return err("replications must be at least 1".into());
        }
        match self.sampler {
            SamplerKind::Mtm | SamplerKind::TwoCycle => {
                if self.mtm.is_none() {
                    return err(format!(
                        "sampler {} needs mtm_k and mtm_h",
                        self.sampler.name()
                    ));
                }
            }
            _ => {
                if self.mtm.is_some() {
                    return err(format!(
                        "mtm_k/mtm_h are not valid for sampler {}",
                        self.sampler.name()
                    ));
                }
            }
        }
        if let Some(r) = self.lru_ratio {
            if self.sampler == SamplerKind::Srrw {
                return err("lru_ratio cannot be combined with sampler srrw".into());
            }
            if !(r > 0.0 && r < 1.0) {
                return err(format!("lru_ratio must lie in (0, 1), got {r}"));
            }
        }
        if let Some(spec) = &self.estimator {
            if spec.truth == 0.0 {
                return err("estimator truth must be nonzero for nrmse".into());
            }
            if spec.values.len() != graph.node_count() {
                return err(format!(
                    "test function has {} values for {} nodes",
                    spec.values.len(),
                    graph.node_count()
                ));
            }
        }
        if graph.node_count() < 2 {
            return err("graph needs at least 2 nodes".into());
        }
        if !graph.is_connected() {
            return Err(EngineError::Graph(GraphError::Disconnected {
                components: 0,
            }));
        }
        if let InitialStateMode::Fixed(n) = self.initial_state {
            graph.node(n)?;
        }
        Ok(())
    }

    /// Resolved key/value view for CSV headers and config echoing.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("sampler".into(), self.sampler.name().into()),
            ("alpha".into(), self.alpha.to_string()),
            ("target".into(), format!("{:?}", self.weights).to_lowercase()),
            ("burn_in_fraction".into(), self.burn_in_fraction.to_string()),
            ("fake_counts".into(), self.fake_counts.name().into()),
            ("init".into(), self.initial_state.describe()),
            ("replications".into(), self.replications.to_string()),
            ("seed".into(), self.base_seed.to_string()),
        ];
        if let Some(t) = self.total_steps {
            kv.push(("total_steps".into(), t.to_string()));
        }
        if let Some(b) = self.budget {
            kv.push(("budget".into(), b.to_string()));
        }
        if let Some(m) = &self.mtm {
            kv.push(("mtm_k".into(), m.num_candidates.to_string()));
            kv.push(("mtm_h".into(), m.balance.name().into()));
        }
        if let Some(r) = self.lru_ratio {
            kv.push(("lru_ratio".into(), r.to_string()));
        }
        if let Some(s) = self.snapshot_stride {
            kv.push(("snapshot_stride".into(), s.to_string()));
        }
        if let Some(e) = &self.estimator {
            kv.push(("estimator_truth".into(), e.truth.to_string()));
            kv.push(("estimator_reweight".into(), e.reweight.to_string()));
        }
        kv.sort();
        kv
    }
}

/// One metric snapshot along a chain.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot {
    pub step: u64,
    pub cost: f64,
    pub tvd: f64,
    pub estimate: Option<f64>,
}

/// Everything one chain produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub snapshots: Vec<Snapshot>,
    /// Post-burn-in empirical measure; sums to 1.
    pub final_measure: Vec<f64>,
    pub final_estimate: Option<f64>,
    pub accept_rate: f64,
    pub delayed_fires: u64,
    pub clamp_events: u64,
    pub steps: u64,
    pub total_cost: f64,
}

#[derive(Debug, Clone)]
enum OracleKind {
    Plain(PlainOracle),
    History(HistoryTarget),
}

impl OracleKind {
    fn record(&mut self, graph: &Graph, i: NodeId) {
        match self {
            OracleKind::Plain(o) => o.record_visit(graph, i),
            OracleKind::History(t) => t.record_visit(graph, i),
        }
    }

    fn step(
        &mut self,
        sampler: SamplerKind,
        graph: &Graph,
        mtm: Option<&MtmConfig>,
        state: &mut ChainState,
        rngs: &mut ChainRngs,
    ) -> StepOutcome {
        match (sampler, self) {
            (SamplerKind::Mhrw, OracleKind::Plain(o)) => mh_step(graph, o, state, rngs),
            (SamplerKind::Mhrw, OracleKind::History(t)) => mh_step(graph, t, state, rngs),
            (SamplerKind::Mtm, OracleKind::Plain(o)) => {
                mtm_step(graph, o, mtm.expect("validated"), state, rngs)
            }
            (SamplerKind::Mtm, OracleKind::History(t)) => {
                mtm_step(graph, t, mtm.expect("validated"), state, rngs)
            }
            (SamplerKind::Mhda, OracleKind::Plain(o)) => mhda_step(graph, o, state, rngs),
            (SamplerKind::Mhda, OracleKind::History(t)) => mhda_step(graph, t, state, rngs),
            (SamplerKind::TwoCycle, OracleKind::Plain(o)) => {
                two_cycle_step(graph, o, mtm.expect("validated"), state, rngs)
            }
            (SamplerKind::TwoCycle, OracleKind::History(t)) => {
                two_cycle_step(graph, t, mtm.expect("validated"), state, rngs)
            }
            (SamplerKind::Srrw, OracleKind::History(t)) => srrw_step(graph, t, state, rngs),
            (SamplerKind::Srrw, OracleKind::Plain(_)) => {
                unreachable!("srrw always runs with a history store")
            }
        }
    }
}

fn build_defaults(
    config: &ExperimentConfig,
    graph: &Graph,
    replication: u64,
) -> DefaultCounts {
    match config.fake_counts {
        FakeCountMode::Unif => DefaultCounts::Constant(1.0),
        FakeCountMode::Deg => {
            let total = 2.0 * graph.edge_count() as f64;
            let table: Vec<f64> = graph
                .nodes()
                .map(|i| graph.degree(i) as f64 / total)
                .collect();
            DefaultCounts::Table(Arc::new(table))
        }
        FakeCountMode::NonUnif => {
            let mut rng = stream(config.base_seed, replication, StreamDomain::FakeCounts);
            let gamma = Gamma::new(0.5, 1.0).expect("valid shape");
            let n = graph.node_count();
            let mut draws: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
            let total: f64 = draws.iter().sum();
            for d in &mut draws {
                *d = (*d / total).max(1e-12);
            }
            DefaultCounts::Table(Arc::new(draws))
        }
    }
}

fn pick_initial_state(
    config: &ExperimentConfig,
    graph: &Graph,
    replication: u64,
) -> Result<NodeId, EngineError> {
    let mut rng = stream(config.base_seed, replication, StreamDomain::InitState);
    match config.initial_state {
        InitialStateMode::Fixed(n) => Ok(graph.node(n)?),
        InitialStateMode::UniformRandom => {
            Ok(NodeId(rng.random_range(0..graph.node_count() as u32)))
        }
        InitialStateMode::LowDegree | InitialStateMode::HighDegree => {
            let avg = graph.average_degree();
            let low = matches!(config.initial_state, InitialStateMode::LowDegree);
            let group: Vec<NodeId> = graph
                .nodes()
                .filter(|&i| {
                    let d = graph.degree(i) as f64;
                    if low {
                        d < avg
                    } else {
                        d >= avg
                    }
                })
                .collect();
            if group.is_empty() {
                return Err(EngineError::Config(format!(
                    "{} group is empty on this graph",
                    config.initial_state.describe()
                )));
            }
            Ok(group[rng.random_range(0..group.len())])
        }
    }
}

fn build_oracle(
    config: &ExperimentConfig,
    graph: &Graph,
    replication: u64,
) -> Result<OracleKind, EngineError> {
    let history_needed = config.sampler == SamplerKind::Srrw || config.alpha > 0.0;
    if !history_needed {
        return Ok(OracleKind::Plain(PlainOracle::new(config.weights.clone())));
    }
    let defaults = build_defaults(config, graph, replication);
    let store = match config.lru_ratio {
        Some(r) => CountStore::Lru(LruVisitStore::with_ratio(r, graph.node_count(), defaults)?),
        None => CountStore::Exact(VisitStore::new(defaults)),
    };
    Ok(OracleKind::History(HistoryTarget::new(
        config.alpha,
        config.weights.clone(),
        store,
    )?))
}

enum StopRule {
    Steps(u64),
    Budget(f64),
}

struct MetricAccumulator {
    counts: Vec<f64>,
    samples: u64,
    f_sum: f64,
    is_num: f64,
    is_den: f64,
}

impl MetricAccumulator {
    fn new(n: usize) -> Self {
        MetricAccumulator {
            counts: vec![0.0; n],
            samples: 0,
            f_sum: 0.0,
            is_num: 0.0,
            is_den: 0.0,
        }
    }

    fn record(&mut self, config: &ExperimentConfig, graph: &Graph, node: NodeId) {
        self.counts[node.index()] += 1.0;
        self.samples += 1;
        if let Some(spec) = &config.estimator {
            let f = spec.values[node.index()];
            if spec.reweight {
                let w = 1.0 / config.weights.mu_tilde(graph, node);
                self.is_num += f * w;
                self.is_den += w;
            } else {
                self.f_sum += f;
            }
        }
    }

    fn measure(&self) -> Vec<f64> {
        let n = self.samples as f64;
        self.counts.iter().map(|c| c / n).collect()
    }

    fn estimate(&self, config: &ExperimentConfig) -> Option<f64> {
        let spec = config.estimator.as_ref()?;
        if self.samples == 0 {
            return None;
        }
        Some(if spec.reweight {
            self.is_num / self.is_den
        } else {
            self.f_sum / self.samples as f64
        })
    }
}

/// Run one chain. Replication `r` derives its streams from
/// `(base_seed, r)`; identical inputs reproduce the identical result.
pub fn run_chain(
    config: &ExperimentConfig,
    graph: &Graph,
    replication: u64,
) -> Result<RunResult, EngineError> {
    config.validate(graph)?;
    let mu = config.weights.normalized(graph);
    let start = pick_initial_state(config, graph, replication)?;
    let mut oracle = build_oracle(config, graph, replication)?;
    let mut state = ChainState::new(start);
    let mut rngs = ChainRngs::for_chain(config.base_seed, replication);
    let mut acc = MetricAccumulator::new(graph.node_count());

    let stop = match (config.total_steps, config.budget) {
        (Some(t), None) => StopRule::Steps(t),
        (None, Some(b)) => StopRule::Budget(b),
        _ => unreachable!("validated"),
    };

    // burn-in boundary and snapshot grid
    let (burn_in_steps, burn_in_cost) = match stop {
        StopRule::Steps(t) => ((config.burn_in_fraction * t as f64).floor() as u64, 0.0),
        StopRule::Budget(b) => (0, config.burn_in_fraction * b),
    };
    let step_stride = match stop {
        StopRule::Steps(t) => {
            let default = (t as f64 / 100.0).ceil().max(1.0) as u64;
            config
                .snapshot_stride
                .map(|s| (s.round() as u64).max(1))
                .unwrap_or(default)
        }
        StopRule::Budget(_) => 1,
    };
    let cost_stride = match stop {
        StopRule::Budget(b) => config.snapshot_stride.unwrap_or(b / 100.0).max(f64::MIN_POSITIVE),
        StopRule::Steps(_) => f64::INFINITY,
    };
    // cost grid aligned on stride multiples, first checkpoint past burn-in
    let mut next_checkpoint = match stop {
        StopRule::Budget(_) => cost_stride * (burn_in_cost / cost_stride).floor() + cost_stride,
        StopRule::Steps(_) => f64::INFINITY,
    };

    let mut snapshots = Vec::new();
    let mut accepted = 0u64;
    let mut delayed_fires = 0u64;
    let mut clamp_events = 0u64;

    loop {
        match stop {
            StopRule::Steps(t) => {
                if state.step >= t {
                    break;
                }
            }
            StopRule::Budget(b) => {
                let base =
                    step_cost(config.sampler, mtm_k(config), graph, state.current, state.phase);
                if state.cumulative_cost + base > b {
                    break;
                }
                // delayed acceptance may add 2 more; in the ambiguous window,
                // try the step and roll back if the realized cost overshoots
                if config.sampler == SamplerKind::Mhda && state.cumulative_cost + 4.0 > b {
                    let saved = state.clone();
                    let out = oracle.step(config.sampler, graph, config.mtm.as_ref(), &mut state, &mut rngs);
                    if state.cumulative_cost > b {
                        // overshoot: discard the trial step (the chain ends
                        // here, so oracle/rng mutations are unobservable)
                        state = saved;
                        break;
                    }
                    record_outcome(
                        config, graph, &out, &mut oracle, &mut acc, &mut accepted,
                        &mut delayed_fires, &mut clamp_events, &state, burn_in_steps, burn_in_cost,
                    );
                    take_snapshots(
                        config, &stop, &state, &acc, &mu, step_stride, burn_in_steps,
                        &mut next_checkpoint, cost_stride, &mut snapshots,
                    )?;
                    continue;
                }
            }
        }

        let out = oracle.step(config.sampler, graph, config.mtm.as_ref(), &mut state, &mut rngs);
        record_outcome(
            config, graph, &out, &mut oracle, &mut acc, &mut accepted, &mut delayed_fires,
            &mut clamp_events, &state, burn_in_steps, burn_in_cost,
        );
        take_snapshots(
            config, &stop, &state, &acc, &mu, step_stride, burn_in_steps, &mut next_checkpoint,
            cost_stride, &mut snapshots,
        )?;
    }

    if acc.samples == 0 {
        return Err(EngineError::Config(format!(
            "no post-burn-in samples: budget {} with burn-in fraction {} left nothing \
             to measure from the start state",
            config.budget.unwrap_or_default(),
            config.burn_in_fraction
        )));
    }

    // budget runs: carry the frozen final measure through any remaining
    // checkpoints so replications share a common grid
    if let StopRule::Budget(b) = stop {
        while next_checkpoint <= b + 1e-9 {
            if acc.samples > 0 {
                let tvd = metrics::tvd(&acc.measure(), &mu)?;
                snapshots.push(Snapshot {
                    step: state.step,
                    cost: next_checkpoint,
                    tvd,
                    estimate: acc.estimate(config),
                });
            }
            next_checkpoint += cost_stride;
        }
    }

    // final snapshot at the stopping step for step runs not on the grid
    if let StopRule::Steps(t) = stop {
        let aligned = t > burn_in_steps && (t - burn_in_steps).is_multiple_of(step_stride);
        if !aligned && acc.samples > 0 {
            let tvd = metrics::tvd(&acc.measure(), &mu)?;
            snapshots.push(Snapshot {
                step: t,
                cost: state.cumulative_cost,
                tvd,
                estimate: acc.estimate(config),
            });
        }
    }

    let final_estimate = acc.estimate(config);
    Ok(RunResult {
        snapshots,
        final_measure: acc.measure(),
        final_estimate,
        accept_rate: accepted as f64 / state.step.max(1) as f64,
        delayed_fires,
        clamp_events,
        steps: state.step,
        total_cost: state.cumulative_cost,
    })
}

fn mtm_k(config: &ExperimentConfig) -> usize {
    config.mtm.map(|m| m.num_candidates).unwrap_or(0)
}

#[allow(clippy::too_many_arguments)]
fn record_outcome(
    config: &ExperimentConfig,
    graph: &Graph,
    out: &StepOutcome,
    oracle: &mut OracleKind,
    acc: &mut MetricAccumulator,
    accepted: &mut u64,
    delayed_fires: &mut u64,
    clamp_events: &mut u64,
    state: &ChainState,
    burn_in_steps: u64,
    burn_in_cost: f64,
) {
    oracle.record(graph, out.next);
    *accepted += u64::from(out.accepted);
    *delayed_fires += u64::from(out.delayed_fired);
    *clamp_events += u64::from(out.clamped);
    let past_burn_in = if config.budget.is_some() {
        state.cumulative_cost > burn_in_cost
    } else {
        state.step > burn_in_steps
    };
    if past_burn_in {
        acc.record(config, graph, out.next);
    }
}

#[allow(clippy::too_many_arguments)]
fn take_snapshots(
    config: &ExperimentConfig,
    stop: &StopRule,
    state: &ChainState,
    acc: &MetricAccumulator,
    mu: &[f64],
    step_stride: u64,
    burn_in_steps: u64,
    next_checkpoint: &mut f64,
    cost_stride: f64,
    snapshots: &mut Vec<Snapshot>,
) -> Result<(), EngineError> {
    match stop {
        StopRule::Steps(_) => {
            let s = state.step;
            if s > burn_in_steps && (s - burn_in_steps).is_multiple_of(step_stride) && acc.samples > 0
            {
                let tvd = metrics::tvd(&acc.measure(), mu)?;
                snapshots.push(Snapshot {
                    step: s,
                    cost: state.cumulative_cost,
                    tvd,
                    estimate: acc.estimate(config),
                });
            }
        }
        StopRule::Budget(b) => {
            while state.cumulative_cost >= *next_checkpoint && *next_checkpoint <= *b + 1e-9 {
                if acc.samples > 0 {
                    let tvd = metrics::tvd(&acc.measure(), mu)?;
                    snapshots.push(Snapshot {
                        step: state.step,
                        cost: *next_checkpoint,
                        tvd,
                        estimate: acc.estimate(config),
                    });
                }
                *next_checkpoint += cost_stride;
            }
        }
    }
    Ok(())
}

/// Aggregated metric curve point over replications.
#[derive(Debug, Clone, Copy)]
pub struct AggregatedSnapshot {
    pub step: f64,
    pub cost: f64,
    pub tvd_mean: f64,
    pub tvd_stderr: f64,
    pub nrmse: Option<f64>,
    pub nrmse_stderr: Option<f64>,
}

/// Replicated experiment output: per-run results plus aggregated curves.
#[derive(Debug, Clone)]
pub struct Replicated {
    pub runs: Vec<RunResult>,
    pub curves: Vec<AggregatedSnapshot>,
}

impl Replicated {
    pub fn final_snapshot(&self) -> Option<&AggregatedSnapshot> {
        self.curves.last()
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregate per-run curves point by point; the result is invariant to the
/// order of the runs.
pub fn aggregate(config: &ExperimentConfig, runs: &[RunResult]) -> Result<Vec<AggregatedSnapshot>, EngineError> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    let count = first.snapshots.len();
    for r in runs {
        if r.snapshots.len() != count {
            return Err(EngineError::Config(format!(
                "replications disagree on snapshot count: {} vs {count}",
                r.snapshots.len()
            )));
        }
    }
    let truth = config.estimator.as_ref().map(|e| e.truth);
    let mut curves = Vec::with_capacity(count);
    for k in 0..count {
        let steps: Vec<f64> = runs.iter().map(|r| r.snapshots[k].step as f64).collect();
        let costs: Vec<f64> = runs.iter().map(|r| r.snapshots[k].cost).collect();
        let tvds: Vec<f64> = runs.iter().map(|r| r.snapshots[k].tvd).collect();
        let (tvd_mean, tvd_stderr) = mean_and_stderr(&tvds);
        let (nrmse, nrmse_stderr) = match truth {
            Some(t) => {
                let sq: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| r.snapshots[k].estimate)
                    .map(|e| (e - t) * (e - t))
                    .collect();
                if sq.is_empty() {
                    (None, None)
                } else {
                    let (m, se) = mean_and_stderr(&sq);
                    let value = m.sqrt() / t.abs();
                    // delta method through sqrt(m)/t
                    let stderr = if m > 0.0 {
                        se / (2.0 * m.sqrt()) / t.abs()
                    } else {
                        0.0
                    };
                    (Some(value), Some(stderr))
                }
            }
            None => (None, None),
        };
        curves.push(AggregatedSnapshot {
            step: steps.iter().sum::<f64>() / steps.len() as f64,
            cost: costs.iter().sum::<f64>() / costs.len() as f64,
            tvd_mean,
            tvd_stderr,
            nrmse,
            nrmse_stderr,
        });
    }
    Ok(curves)
}

/// Run `replications` independent chains (in parallel) and aggregate.
pub fn run_replicated(config: &ExperimentConfig, graph: &Graph) -> Result<Replicated, EngineError> {
    config.validate(graph)?;
    let runs: Result<Vec<RunResult>, EngineError> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run_chain(config, graph, r))
        .collect();
    let runs = runs?;
    let curves = aggregate(config, &runs)?;
    Ok(Replicated { runs, curves })
}
