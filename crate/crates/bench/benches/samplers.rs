use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

use hdt_bench::bench_graph;
use hdt_core::metrics::tvd;
use hdt_core::rng::ChainRngs;
use hdt_core::samplers::{mh_step, srrw_step, ChainState, PlainOracle};
use hdt_core::target::{CountStore, DefaultCounts, HistoryTarget, LruVisitStore, VisitStore};
use hdt_core::{NodeId, TargetWeights};

fn bench_mh_steps(c: &mut Criterion) {
    let graph = bench_graph(4000, 80_000);
    let mut group = c.benchmark_group("mh_step");
    group.throughput(Throughput::Elements(1));

    group.bench_function("plain", |b| {
        let mut oracle = PlainOracle::new(TargetWeights::Uniform);
        let mut state = ChainState::new(NodeId(0));
        let mut rngs = ChainRngs::for_chain(1, 0);
        b.iter(|| {
            let out = mh_step(&graph, &mut oracle, &mut state, &mut rngs);
            black_box(out.next)
        });
    });

    group.bench_function("history_exact", |b| {
        let mut oracle = HistoryTarget::new(
            5.0,
            TargetWeights::Uniform,
            CountStore::Exact(VisitStore::new(DefaultCounts::Constant(1.0))),
        )
        .unwrap();
        let mut state = ChainState::new(NodeId(0));
        let mut rngs = ChainRngs::for_chain(1, 0);
        b.iter(|| {
            let out = mh_step(&graph, &mut oracle, &mut state, &mut rngs);
            oracle.record_visit(&graph, out.next);
            black_box(out.next)
        });
    });

    group.bench_function("history_lru", |b| {
        let store = LruVisitStore::with_ratio(0.1, graph.node_count(), DefaultCounts::Constant(1.0))
            .unwrap();
        let mut oracle =
            HistoryTarget::new(5.0, TargetWeights::Uniform, CountStore::Lru(store)).unwrap();
        let mut state = ChainState::new(NodeId(0));
        let mut rngs = ChainRngs::for_chain(1, 0);
        b.iter(|| {
            let out = mh_step(&graph, &mut oracle, &mut state, &mut rngs);
            oracle.record_visit(&graph, out.next);
            black_box(out.next)
        });
    });

    group.finish();
}

fn bench_srrw_step(c: &mut Criterion) {
    let graph = bench_graph(4000, 80_000);
    let mut group = c.benchmark_group("srrw_step");
    group.throughput(Throughput::Elements(1));
    group.bench_function("exact", |b| {
        let mut target = HistoryTarget::new(
            5.0,
            TargetWeights::Uniform,
            CountStore::Exact(VisitStore::new(DefaultCounts::Constant(1.0))),
        )
        .unwrap();
        let mut state = ChainState::new(NodeId(0));
        let mut rngs = ChainRngs::for_chain(2, 0);
        b.iter(|| {
            let out = srrw_step(&graph, &mut target, &mut state, &mut rngs);
            target.record_visit(&graph, out.next);
            black_box(out.next)
        });
    });
    group.finish();
}

fn bench_tvd(c: &mut Criterion) {
    let n = 4000;
    let uniform = vec![1.0 / n as f64; n];
    let mut skewed = uniform.clone();
    skewed[0] += 0.25;
    skewed[1] -= 0.25;
    c.bench_function("tvd_4000", |b| {
        b.iter(|| black_box(tvd(&skewed, &uniform).unwrap()))
    });
}

criterion_group!(benches, bench_mh_steps, bench_srrw_step, bench_tvd);
criterion_main!(benches);
