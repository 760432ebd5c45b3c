//! Shared fixtures for the sampler benchmarks.

use std::io::Cursor;

use hdt_core::{load_edge_list, Graph};

/// Deterministic graph: a cycle over `n` nodes plus `chords` pseudo-random
/// chords (splitmix-derived, no RNG dependency here).
pub fn bench_graph(n: usize, chords: usize) -> Graph {
    let mut text = String::new();
    for v in 0..n {
        text.push_str(&format!("{} {}\n", v, (v + 1) % n));
    }
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    for _ in 0..chords {
        let u = next() % n;
        let v = next() % n;
        if u != v {
            text.push_str(&format!("{u} {v}\n"));
        }
    }
    load_edge_list(Cursor::new(text), true).unwrap()
}
