//! Compare each base sampler with its history-driven version on a small
//! community graph and print the final total variation distances.
//!
//! ```sh
//! cargo run --release -p hdt-core --example compare_samplers
//! ```

use std::io::Cursor;

use hdt_core::engine::run_replicated;
use hdt_core::samplers::{BalanceFunction, MtmConfig};
use hdt_core::{load_edge_list, ExperimentConfig, Graph, SamplerKind, TargetWeights};

fn two_clique_bridge(m: usize) -> Graph {
    let mut text = String::new();
    for block in 0..2 {
        let base = block * m;
        for i in 0..m {
            for j in (i + 1)..m {
                text.push_str(&format!("{} {}\n", base + i, base + j));
            }
        }
    }
    text.push_str(&format!("{} {}\n", m - 1, m));
    load_edge_list(Cursor::new(text), true).unwrap()
}

fn main() {
    let graph = two_clique_bridge(12);
    let steps = 6_000;
    let replications = 100;
    let mtm = MtmConfig::new(3, BalanceFunction::Sqrt).unwrap();

    println!(
        "two-clique graph: {} nodes, {} edges, {} steps, {} replications",
        graph.node_count(),
        graph.edge_count(),
        steps,
        replications
    );
    println!("{:<10} {:>12} {:>14} {:>8}", "sampler", "base tvd", "history tvd", "ratio");

    let families = [
        (SamplerKind::Mhrw, None),
        (SamplerKind::Mtm, Some(mtm)),
        (SamplerKind::Mhda, None),
        (SamplerKind::TwoCycle, Some(mtm)),
    ];
    for (kind, mtm_cfg) in families {
        let mut base = ExperimentConfig::step_run(kind, 0.0, TargetWeights::Uniform, steps);
        base.mtm = mtm_cfg;
        base.replications = replications;
        base.base_seed = 7;
        let mut history = base.clone();
        history.alpha = 5.0;

        let base_tvd = run_replicated(&base, &graph)
            .unwrap()
            .final_snapshot()
            .unwrap()
            .tvd_mean;
        let history_tvd = run_replicated(&history, &graph)
            .unwrap()
            .final_snapshot()
            .unwrap()
            .tvd_mean;
        println!(
            "{:<10} {:>12.4} {:>14.4} {:>8.2}",
            kind.name(),
            base_tvd,
            history_tvd,
            base_tvd / history_tvd
        );
    }
}
