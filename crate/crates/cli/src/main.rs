//! `hdt`: graph-sampling experiments with history-driven targets.
//!
//! Subcommands: `ingest` (edge-list stats), `run` (step-count experiment),
//! `budget` (cost-budget experiment with a self-repellent-walk comparison),
//! `spectral` (exact covariance report), `ode` (mean-field trajectory),
//! `labels` (Bernoulli label file). Exit codes: 0 success, 1 configuration
//! error, 2 data error.

mod config;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdt_core::analysis::{
    build_mh_kernel, covariance_base, covariance_hdt, covariance_srrw, ode_integrate,
    reversible_spectrum,
};
use hdt_core::engine::{run_replicated, ExperimentConfig};
use hdt_core::metrics::assign_labels;
use hdt_core::report::{
    graph_hash, write_comment_header, write_curves, write_matrix_section, write_vector_section,
    CurveSection,
};
use hdt_core::rng::{stream, StreamDomain};
use hdt_core::samplers::SamplerKind;
use hdt_core::{load_edge_list, Graph};

use config::{build_experiment, parse_target, KeyValues};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hdt",
    about = "Graph sampling with history-driven targets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print node/edge/degree statistics after normalization.
    Ingest {
        /// SNAP-style edge list
        graph: PathBuf,
    },
    /// Replicated step-count experiment; emits TVD/NRMSE curves as CSV.
    Run(RunArgs),
    /// Replicated cost-budget experiment; also runs the self-repellent
    /// walk under the same budget unless it is the configured sampler.
    Budget(RunArgs),
    /// Exact spectral covariance report for a small graph.
    Spectral {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// uniform | degree | file:`<path>`
        #[arg(long, default_value = "uniform")]
        target: String,
    },
    /// Integrate the mean-field trajectory of the empirical measure.
    Ode {
        /// Target: uniform:`<n>` or comma-separated weights
        #[arg(long)]
        mu: String,
        #[arg(long)]
        alpha: f64,
        /// Start point: "mu" or comma-separated probabilities
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 0.01)]
        step_size: f64,
        #[arg(long, default_value_t = 4000)]
        steps: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Draw Bernoulli(p) node labels and write them as `<node> <label>`.
    Labels {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Flags shared by `run` and `budget`; every flag overrides the same key in
/// the config file, so a header produced by a previous run can be replayed.
#[derive(Args)]
struct RunArgs {
    /// Flat "key = value" config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// mhrw | mtm | mhda | two_cycle | srrw
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    total_steps: Option<u64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    burn_in_fraction: Option<f64>,
    /// unif | deg | non_unif
    #[arg(long)]
    fake_counts: Option<String>,
    #[arg(long)]
    lru_ratio: Option<f64>,
    /// fixed:`<node>` | low_degree | high_degree | uniform_random
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshot_stride: Option<f64>,
    /// uniform | degree | file:`<path>`
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    mtm_k: Option<usize>,
    #[arg(long)]
    mtm_h: Option<String>,
    #[arg(long)]
    label_p: Option<f64>,
    #[arg(long)]
    labels_file: Option<PathBuf>,
    /// nrmse baseline for non-uniform targets: target | uniform
    #[arg(long)]
    truth: Option<String>,
}

impl RunArgs {
    fn merge(&self) -> Result<KeyValues, CliError> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::from_file(path)?,
            None => KeyValues::default(),
        };
        let mut set_opt = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                kv.set(key, v);
            }
        };
        set_opt("graph", self.graph.as_ref().map(|p| p.display().to_string()));
        set_opt("output", self.output.as_ref().map(|p| p.display().to_string()));
        set_opt("sampler", self.sampler.clone());
        set_opt("alpha", self.alpha.map(|v| v.to_string()));
        set_opt("total_steps", self.total_steps.map(|v| v.to_string()));
        set_opt("budget", self.budget.map(|v| v.to_string()));
        set_opt(
            "burn_in_fraction",
            self.burn_in_fraction.map(|v| v.to_string()),
        );
        set_opt("fake_counts", self.fake_counts.clone());
        set_opt("lru_ratio", self.lru_ratio.map(|v| v.to_string()));
        set_opt("init", self.init.clone());
        set_opt("replications", self.replications.map(|v| v.to_string()));
        set_opt("seed", self.seed.map(|v| v.to_string()));
        set_opt(
            "snapshot_stride",
            self.snapshot_stride.map(|v| v.to_string()),
        );
        set_opt("target", self.target.clone());
        set_opt("mtm_k", self.mtm_k.map(|v| v.to_string()));
        set_opt("mtm_h", self.mtm_h.clone());
        set_opt("label_p", self.label_p.map(|v| v.to_string()));
        set_opt(
            "labels_file",
            self.labels_file.as_ref().map(|p| p.display().to_string()),
        );
        set_opt("truth", self.truth.clone());
        Ok(kv)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Data(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { graph } => cmd_ingest(&graph),
        Command::Run(args) => cmd_run(&args, false),
        Command::Budget(args) => cmd_run(&args, true),
        Command::Spectral {
            graph,
            output,
            alpha,
            target,
        } => cmd_spectral(&graph, &output, alpha, &target),
        Command::Ode {
            mu,
            alpha,
            x0,
            step_size,
            steps,
            output,
        } => cmd_ode(&mu, alpha, &x0, step_size, steps, &output),
        Command::Labels {
            graph,
            p,
            seed,
            output,
        } => cmd_labels(&graph, p, seed, &output),
    }
}

fn load_graph(path: &std::path::Path) -> Result<Graph, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open graph {}: {e}", path.display())))?;
    let raw = load_edge_list(BufReader::new(file), true)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(raw.largest_connected_component())
}

fn create_output(path: &std::path::Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
        .map(BufWriter::new)
}

fn cmd_ingest(path: &std::path::Path) -> Result<(), CliError> {
    let graph = load_graph(path)?;
    println!(
        "nodes={} edges={} avg_degree={:.3}",
        graph.node_count(),
        graph.edge_count(),
        graph.average_degree()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs, budget_mode: bool) -> Result<(), CliError> {
    let kv = args.merge()?;
    let graph_path = kv
        .get("graph")
        .ok_or_else(|| CliError::Config("graph is required".into()))?
        .to_string();
    let output_path = kv
        .get("output")
        .ok_or_else(|| CliError::Config("output is required".into()))?
        .to_string();
    let graph = load_graph(std::path::Path::new(&graph_path))?;
    let config = build_experiment(&kv, &graph)?;

    if budget_mode && config.budget.is_none() {
        return Err(CliError::Config("budget is required for the budget command".into()));
    }
    if !budget_mode && config.total_steps.is_none() {
        return Err(CliError::Config("total_steps is required for the run command".into()));
    }
    config
        .validate(&graph)
        .map_err(|e| CliError::Config(e.to_string()))?;

    // resolved configuration: engine view plus CLI-level keys
    let mut header = config.echo();
    header.push(("command".into(), if budget_mode { "budget" } else { "run" }.into()));
    header.push(("graph".into(), graph_path.clone()));
    if let Some(f) = kv.get("labels_file") {
        header.push(("labels_file".into(), f.into()));
    } else {
        header.push((
            "label_p".into(),
            kv.get("label_p").unwrap_or("0.3").to_string(),
        ));
    }
    if let Some(t) = kv.get("truth") {
        header.push(("truth".into(), t.into()));
    }
    header.sort();
    for (k, v) in &header {
        eprintln!("# {k} = {v}");
    }

    let main_curves = run_replicated(&config, &graph)
        .map_err(|e| CliError::Config(e.to_string()))?
        .curves;

    let mut sections = vec![CurveSection {
        metric_prefix: "",
        curves: &main_curves,
    }];

    // budget comparison against the self-repellent walk baseline
    let comparison;
    if budget_mode && config.sampler != SamplerKind::Srrw {
        let mut srrw = ExperimentConfig::budget_run(
            SamplerKind::Srrw,
            config.alpha,
            config.weights.clone(),
            config.budget.expect("validated"),
        );
        srrw.burn_in_fraction = config.burn_in_fraction;
        srrw.fake_counts = config.fake_counts;
        srrw.initial_state = config.initial_state;
        srrw.replications = config.replications;
        srrw.base_seed = config.base_seed;
        srrw.snapshot_stride = config.snapshot_stride;
        srrw.estimator = config.estimator.clone();
        srrw.validate(&graph)
            .map_err(|e| CliError::Config(e.to_string()))?;
        comparison = run_replicated(&srrw, &graph)
            .map_err(|e| CliError::Config(e.to_string()))?
            .curves;
        sections.push(CurveSection {
            metric_prefix: "srrw_",
            curves: &comparison,
        });
    }

    let mut out = create_output(std::path::Path::new(&output_path))?;
    write_curves(&mut out, &header, &sections)
        .map_err(|e| CliError::Data(format!("write {output_path}: {e}")))?;
    out.flush()
        .map_err(|e| CliError::Data(format!("write {output_path}: {e}")))?;
    Ok(())
}

const SPECTRAL_NODE_CAP: usize = 2000;

fn cmd_spectral(
    graph_path: &std::path::Path,
    output: &std::path::Path,
    alpha: f64,
    target: &str,
) -> Result<(), CliError> {
    let graph = load_graph(graph_path)?;
    if graph.node_count() > SPECTRAL_NODE_CAP {
        return Err(CliError::Config(format!(
            "spectral analysis is capped at {SPECTRAL_NODE_CAP} nodes; graph has {}",
            graph.node_count()
        )));
    }
    let weights = parse_target(target, &graph)?;
    let mu = weights.normalized(&graph);
    let kernel = build_mh_kernel(&graph, &mu).map_err(|e| CliError::Config(e.to_string()))?;
    let report = reversible_spectrum(&kernel).map_err(|e| CliError::Config(e.to_string()))?;
    let v_base = covariance_base(&report).map_err(|e| CliError::Config(e.to_string()))?;
    let v_hdt = covariance_hdt(&v_base, alpha);
    let v_srrw = covariance_srrw(&report, alpha).map_err(|e| CliError::Config(e.to_string()))?;

    let header = vec![
        ("alpha".to_string(), alpha.to_string()),
        ("command".to_string(), "spectral".to_string()),
        (
            "graph".to_string(),
            graph_path.display().to_string(),
        ),
        (
            "graph_hash".to_string(),
            format!("{:016x}", graph_hash(&graph)),
        ),
        ("nodes".to_string(), graph.node_count().to_string()),
        ("target".to_string(), target.to_string()),
    ];
    let mut out = create_output(output)?;
    let io_err = |e: std::io::Error| CliError::Data(format!("write {}: {e}", output.display()));
    write_comment_header(&mut out, &header).map_err(io_err)?;
    write_vector_section(&mut out, "eigenvalues", &report.eigenvalues).map_err(io_err)?;
    write_vector_section(&mut out, "target", &report.target).map_err(io_err)?;
    write_matrix_section(&mut out, "v_base", &v_base).map_err(io_err)?;
    write_matrix_section(&mut out, "v_hdt", &v_hdt).map_err(io_err)?;
    write_matrix_section(&mut out, "v_srrw", &v_srrw).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(())
}

fn parse_simplex(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if let Some(n) = spec.strip_prefix("uniform:") {
        let n: usize = n
            .parse()
            .map_err(|e| CliError::Config(format!("invalid {what} {spec:?}: {e}")))?;
        if n < 2 {
            return Err(CliError::Config(format!("{what} needs at least 2 states")));
        }
        return Ok(vec![1.0 / n as f64; n]);
    }
    let values: Result<Vec<f64>, _> = spec.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let mut values =
        values.map_err(|e| CliError::Config(format!("invalid {what} {spec:?}: {e}")))?;
    let total: f64 = values.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(CliError::Config(format!("{what} must have positive mass")));
    }
    for v in &mut values {
        *v /= total;
    }
    Ok(values)
}

fn cmd_ode(
    mu_spec: &str,
    alpha: f64,
    x0_spec: &str,
    step_size: f64,
    steps: usize,
    output: &std::path::Path,
) -> Result<(), CliError> {
    let mu = parse_simplex(mu_spec, "mu")?;
    let x0 = if x0_spec == "mu" {
        mu.clone()
    } else {
        parse_simplex(x0_spec, "x0")?
    };
    let trajectory = ode_integrate(&mu, alpha, &x0, step_size, steps)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let header = vec![
        ("alpha".to_string(), alpha.to_string()),
        ("command".to_string(), "ode".to_string()),
        ("mu".to_string(), mu_spec.to_string()),
        ("step_size".to_string(), step_size.to_string()),
        ("steps".to_string(), steps.to_string()),
        ("x0".to_string(), x0_spec.to_string()),
    ];
    let mut out = create_output(output)?;
    let io_err = |e: std::io::Error| CliError::Data(format!("write {}: {e}", output.display()));
    write_comment_header(&mut out, &header).map_err(io_err)?;
    let columns: Vec<String> = (0..mu.len()).map(|i| format!("x{i}")).collect();
    writeln!(out, "t,{}", columns.join(",")).map_err(io_err)?;
    for (k, x) in trajectory.iter().enumerate() {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{}", k as f64 * step_size, row.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

fn cmd_labels(
    graph_path: &std::path::Path,
    p: f64,
    seed: u64,
    output: &std::path::Path,
) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::Config(format!("p must lie in [0,1], got {p}")));
    }
    let graph = load_graph(graph_path)?;
    let mut rng = stream(seed, 0, StreamDomain::Labels);
    let labels = assign_labels(&graph, p, &mut rng);
    let mu = vec![1.0 / graph.node_count() as f64; graph.node_count()];

    let mut out = create_output(output)?;
    let io_err = |e: std::io::Error| CliError::Data(format!("write {}: {e}", output.display()));
    write_comment_header(
        &mut out,
        &[
            ("command".to_string(), "labels".to_string()),
            ("graph".to_string(), graph_path.display().to_string()),
            ("p".to_string(), p.to_string()),
            ("seed".to_string(), seed.to_string()),
            (
                "uniform_truth".to_string(),
                labels.uniform_truth().to_string(),
            ),
            (
                "weighted_truth_uniform_mu".to_string(),
                labels
                    .weighted_truth(&mu)
                    .map_err(|e| CliError::Config(e.to_string()))?
                    .to_string(),
            ),
        ],
    )
    .map_err(io_err)?;
    labels
        .write(&graph, &mut out)
        .map_err(|e| CliError::Data(e.to_string()))?;
    out.flush().map_err(io_err)?;
    Ok(())
}
