//! Graph sampling with history-driven targets.
//!
//! A walker on an undirected graph targets a distribution `mu` but is
//! steered by its own visit history: the target handed to the base sampler
//! is reweighted per node by `(x_tilde_i / mu_tilde_i)^(-alpha)`, so
//! over-visited nodes repel the walker and under-visited ones attract it.
//! The empirical measure still converges to `mu`, with the limiting
//! covariance shrunk by `1/(2 alpha + 1)`, and any Metropolis-style sampler
//! (reversible or not) can serve as the base chain because only pairwise
//! target ratios are ever evaluated.
//!
//! The crate bundles:
//! - [`graph`]: SNAP-style edge-list ingestion into compact adjacency form;
//! - [`target`]: target weights, exact and LRU-capped visit stores, and the
//!   history-driven target;
//! - [`samplers`]: MH, multiple-try MH, delayed-acceptance MH, 2-cycle
//!   steppers, and the self-repellent random walk baseline that reweights
//!   whole kernel rows;
//! - [`engine`]: replicated experiment runs under step or cost budgets;
//! - [`metrics`]: TVD, estimators, NRMSE, label assignments;
//! - [`analysis`]: exact kernels, spectra, limiting covariances, the
//!   mean-field ODE, and Monte-Carlo covariance estimation;
//! - [`report`]: reproducible CSV output.
//!
//! ```
//! use hdt_core::engine::run_replicated;
//! use hdt_core::{load_edge_list, ExperimentConfig, SamplerKind, TargetWeights};
//!
//! let graph = load_edge_list(std::io::Cursor::new("0 1\n1 2\n2 0\n"), true)?
//!     .largest_connected_component();
//! let mut config =
//!     ExperimentConfig::step_run(SamplerKind::Mhrw, 5.0, TargetWeights::Uniform, 3_000);
//! config.replications = 10;
//! let result = run_replicated(&config, &graph)?;
//! let last = result.curves.last().unwrap();
//! assert!(last.tvd_mean < 0.05);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analysis;
pub mod engine;
pub mod graph;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod samplers;
pub mod target;

pub use engine::{
    EngineError, EstimatorSpec, ExperimentConfig, FakeCountMode, InitialStateMode, Replicated,
    RunResult, Snapshot,
};
pub use graph::{load_edge_list, Graph, GraphError, NodeId};
pub use metrics::{LabelAssignment, MetricsError};
pub use samplers::{BalanceFunction, MtmConfig, SamplerKind};
pub use target::{
    CountStore, DefaultCounts, HistoryTarget, LruVisitStore, TargetError, TargetWeights,
    VisitStore,
};
