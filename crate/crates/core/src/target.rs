//! Target weights, visit-count stores, and the history-driven target.
//!
//! The history-driven target evaluates, for self-repellency strength
//! `alpha >= 0`, the unnormalized mass
//!
//! ```text
//! pi_tilde_i[x] = mu_tilde_i * (x_tilde_i / mu_tilde_i)^(-alpha)
//! ```
//!
//! so a node visited more often than its share under `mu` loses mass and an
//! under-visited node gains it. All arithmetic runs in log space; only
//! ratios of `pi_tilde` are ever needed by the samplers, which keeps every
//! quantity invariant to rescaling of counts or weights.
//!
//! Visit counts are held either exactly (sparse map with lazy positive
//! defaults, so the target is well defined from step 0) or in a
//! capacity-bounded LRU store that discards the least-recently-used node and
//! reconstructs missing counts from cached neighbors of the walker's
//! current position.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{Graph, NodeId};

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("explicit weight for node {node} must be positive, got {value}")]
    NonPositiveWeight { node: u64, value: f64 },
    #[error("weight file line {line}: {message}")]
    WeightFile { line: usize, message: String },
    #[error("no weight supplied for node with original label {label}")]
    MissingWeight { label: u64 },
    #[error("unknown node label {label} in weight file")]
    UnknownLabel { label: u64 },
    #[error("alpha must be >= 0, got {0}")]
    NegativeAlpha(f64),
    #[error("lru ratio must lie in (0, 1), got {0}")]
    BadLruRatio(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Unnormalized target weights `mu_tilde`.
#[derive(Clone)]
pub enum TargetWeights {
    /// `mu_tilde_i = 1`.
    Uniform,
    /// `mu_tilde_i = |N(i)|`.
    Degree,
    /// Explicit positive per-node weights, indexed by dense node id.
    Explicit(Arc<Vec<f64>>),
    /// `mu_tilde_i = exp(-H(i))` for an energy function `H`.
    Energy(Arc<dyn Fn(NodeId) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for TargetWeights {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetWeights::Uniform => write!(f, "Uniform"),
            TargetWeights::Degree => write!(f, "Degree"),
            TargetWeights::Explicit(w) => write!(f, "Explicit({} nodes)", w.len()),
            TargetWeights::Energy(_) => write!(f, "Energy(..)"),
        }
    }
}

impl TargetWeights {
    /// Explicit weights validated to be strictly positive.
    pub fn explicit(weights: Vec<f64>) -> Result<Self, TargetError> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(TargetError::NonPositiveWeight {
                    node: i as u64,
                    value: w,
                });
            }
        }
        Ok(TargetWeights::Explicit(Arc::new(weights)))
    }

    /// Load explicit weights from `<node> <weight>` lines, keyed by the
    /// graph's original node labels. Every node must receive a weight.
    pub fn from_weight_file<R: BufRead>(source: R, graph: &Graph) -> Result<Self, TargetError> {
        let mut weights = vec![f64::NAN; graph.node_count()];
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
                    return Err(TargetError::WeightFile {
                        line: lineno + 1,
                        message: format!("expected '<node> <weight>', got {trimmed:?}"),
                    })
                }
            };
            let label: u64 = a.parse().map_err(|_| TargetError::WeightFile {
                line: lineno + 1,
                message: format!("invalid node label {a:?}"),
            })?;
            let value: f64 = b.parse().map_err(|_| TargetError::WeightFile {
                line: lineno + 1,
                message: format!("invalid weight {b:?}"),
            })?;
            let node = graph
                .find_original(label)
                .ok_or(TargetError::UnknownLabel { label })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(TargetError::NonPositiveWeight {
                    node: label,
                    value,
                });
            }
            weights[node.index()] = value;
        }
        if let Some(i) = weights.iter().position(|w| w.is_nan()) {
            return Err(TargetError::MissingWeight {
                label: graph.original_label(NodeId(i as u32)),
            });
        }
        Ok(TargetWeights::Explicit(Arc::new(weights)))
    }

    pub fn energy<F>(h: F) -> Self
    where
        F: Fn(NodeId) -> f64 + Send + Sync + 'static,
    {
        TargetWeights::Energy(Arc::new(h))
    }

    /// `mu_tilde_i`.
    pub fn mu_tilde(&self, graph: &Graph, i: NodeId) -> f64 {
        match self {
            TargetWeights::Uniform => 1.0,
            TargetWeights::Degree => graph.degree(i) as f64,
            TargetWeights::Explicit(w) => w[i.index()],
            TargetWeights::Energy(h) => (-h(i)).exp(),
        }
    }

    /// `ln mu_tilde_i`.
    pub fn log_mu_tilde(&self, graph: &Graph, i: NodeId) -> f64 {
        match self {
            TargetWeights::Uniform => 0.0,
            TargetWeights::Degree => (graph.degree(i) as f64).ln(),
            TargetWeights::Explicit(w) => w[i.index()].ln(),
            TargetWeights::Energy(h) => -h(i),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, TargetWeights::Uniform)
    }

    /// Normalized target distribution as a dense vector.
    pub fn normalized(&self, graph: &Graph) -> Vec<f64> {
        let mut mu: Vec<f64> = graph.nodes().map(|i| self.mu_tilde(graph, i)).collect();
        let total: f64 = mu.iter().sum();
        for m in &mut mu {
            *m /= total;
        }
        mu
    }
}

/// Lazy per-node defaults standing in for counts of never-visited nodes.
#[derive(Debug, Clone)]
pub enum DefaultCounts {
    Constant(f64),
    /// `x_tilde_i = |N(i)|`.
    Degree,
    /// Arbitrary positive per-node table (Dirichlet fake counts).
    Table(Arc<Vec<f64>>),
}

impl DefaultCounts {
    fn value(&self, graph: &Graph, i: NodeId) -> f64 {
        match self {
            DefaultCounts::Constant(c) => *c,
            DefaultCounts::Degree => graph.degree(i) as f64,
            DefaultCounts::Table(t) => t[i.index()],
        }
    }
}

/// Exact visit counts, stored sparsely with lazy positive defaults.
#[derive(Debug, Clone)]
pub struct VisitStore {
    counts: HashMap<u32, f64>,
    defaults: DefaultCounts,
    total_increments: u64,
}

impl VisitStore {
    pub fn new(defaults: DefaultCounts) -> Self {
        VisitStore {
            counts: HashMap::new(),
            defaults,
            total_increments: 0,
        }
    }

    pub fn count(&self, graph: &Graph, i: NodeId) -> f64 {
        self.counts
            .get(&i.0)
            .copied()
            .unwrap_or_else(|| self.defaults.value(graph, i))
    }

    pub fn record_visit(&mut self, graph: &Graph, i: NodeId) {
        let slot = self
            .counts
            .entry(i.0)
            .or_insert_with(|| self.defaults.value(graph, i));
        *slot += 1.0;
        self.total_increments += 1;
    }

    /// Pin an explicit count, overriding the lazy default (frozen-history
    /// diagnostics and tests).
    pub fn set_count(&mut self, i: NodeId, count: f64) {
        assert!(count > 0.0, "visit counts must stay positive");
        self.counts.insert(i.0, count);
    }

    pub fn total_increments(&self) -> u64 {
        self.total_increments
    }
}

/// Capacity-bounded visit counts evicting the least-recently-used node.
///
/// Recency order lives in an intrusive doubly-linked list over slot
/// indices; both visits and direct count lookups refresh an entry.
#[derive(Debug, Clone)]
pub struct LruVisitStore {
    capacity: usize,
    map: HashMap<u32, usize>,
    slots: Vec<LruSlot>,
    head: usize, // most recent
    tail: usize, // least recent
    defaults: DefaultCounts,
    total_increments: u64,
    evictions: u64,
}

#[derive(Debug, Clone)]
struct LruSlot {
    node: u32,
    count: f64,
    prev: usize,
    next: usize,
}

const NIL: usize = usize::MAX;

impl LruVisitStore {
    /// Capacity `ceil(ratio * node_count)`, `ratio` in (0, 1).
    pub fn with_ratio(
        ratio: f64,
        node_count: usize,
        defaults: DefaultCounts,
    ) -> Result<Self, TargetError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(TargetError::BadLruRatio(ratio));
        }
        let capacity = ((ratio * node_count as f64).ceil() as usize).max(1);
        Ok(Self::with_capacity(capacity, defaults))
    }

    pub fn with_capacity(capacity: usize, defaults: DefaultCounts) -> Self {
        assert!(capacity >= 1, "lru capacity must be at least 1");
        LruVisitStore {
            capacity,
            map: HashMap::with_capacity(capacity),
            slots: Vec::with_capacity(capacity),
            head: NIL,
            tail: NIL,
            defaults,
            total_increments: 0,
            evictions: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    pub fn total_increments(&self) -> u64 {
        self.total_increments
    }

    pub fn contains(&self, i: NodeId) -> bool {
        self.map.contains_key(&i.0)
    }

    fn unlink(&mut self, slot: usize) {
        let (prev, next) = (self.slots[slot].prev, self.slots[slot].next);
        if prev != NIL {
            self.slots[prev].next = next;
        } else {
            self.head = next;
        }
        if next != NIL {
            self.slots[next].prev = prev;
        } else {
            self.tail = prev;
        }
    }

    fn push_front(&mut self, slot: usize) {
        self.slots[slot].prev = NIL;
        self.slots[slot].next = self.head;
        if self.head != NIL {
            self.slots[self.head].prev = slot;
        }
        self.head = slot;
        if self.tail == NIL {
            self.tail = slot;
        }
    }

    fn touch(&mut self, slot: usize) {
        if self.head != slot {
            self.unlink(slot);
            self.push_front(slot);
        }
    }

    /// Cached count of `i`, refreshing its recency on a hit.
    pub fn get(&mut self, i: NodeId) -> Option<f64> {
        let slot = *self.map.get(&i.0)?;
        self.touch(slot);
        Some(self.slots[slot].count)
    }

    /// Cached count of `i` without touching recency (for aggregate scans).
    pub fn peek(&self, i: NodeId) -> Option<f64> {
        self.map.get(&i.0).map(|&slot| self.slots[slot].count)
    }

    pub fn record_visit(&mut self, graph: &Graph, i: NodeId) {
        self.total_increments += 1;
        if let Some(&slot) = self.map.get(&i.0) {
            self.slots[slot].count += 1.0;
            self.touch(slot);
            return;
        }
        let count = self.defaults.value(graph, i) + 1.0;
        let slot = if self.map.len() == self.capacity {
            let victim = self.tail;
            self.unlink(victim);
            self.map.remove(&self.slots[victim].node);
            self.evictions += 1;
            self.slots[victim].node = i.0;
            self.slots[victim].count = count;
            victim
        } else {
            self.slots.push(LruSlot {
                node: i.0,
                count,
                prev: NIL,
                next: NIL,
            });
            self.slots.len() - 1
        };
        self.map.insert(i.0, slot);
        self.push_front(slot);
    }

    /// Cached nodes in most-recent-first order (test and report helper).
    pub fn nodes_by_recency(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.map.len());
        let mut cur = self.head;
        while cur != NIL {
            out.push(NodeId(self.slots[cur].node));
            cur = self.slots[cur].next;
        }
        out
    }

    /// Count estimate for an uncached node `j`, anchored at the walker's
    /// current state `i`: the cached ratio `x_tilde_k / mu_tilde_k` is
    /// averaged over the expanded neighborhood of `i` (including `i` itself
    /// when cached) and rescaled by `mu_tilde_j`. An empty intersection
    /// degrades to ratio 1, i.e. the node is treated as carrying exactly its
    /// target share.
    pub fn estimate_count(
        &self,
        graph: &Graph,
        weights: &TargetWeights,
        current: NodeId,
        j: NodeId,
    ) -> f64 {
        let mut sum = 0.0;
        let mut hits = 0usize;
        for &k in graph.neighbors(current) {
            if let Some(c) = self.peek(k) {
                sum += c / weights.mu_tilde(graph, k);
                hits += 1;
            }
        }
        if let Some(c) = self.peek(current) {
            sum += c / weights.mu_tilde(graph, current);
            hits += 1;
        }
        let ratio = if hits == 0 { 1.0 } else { sum / hits as f64 };
        weights.mu_tilde(graph, j) * ratio
    }
}

/// Store backing a [`HistoryTarget`].
#[derive(Debug, Clone)]
pub enum CountStore {
    Exact(VisitStore),
    Lru(LruVisitStore),
}

impl CountStore {
    pub fn record_visit(&mut self, graph: &Graph, i: NodeId) {
        match self {
            CountStore::Exact(s) => s.record_visit(graph, i),
            CountStore::Lru(s) => s.record_visit(graph, i),
        }
    }
}

/// Self-repellency strength, target weights, and a visit store: everything
/// needed to evaluate the history-driven target.
#[derive(Debug, Clone)]
pub struct HistoryTarget {
    alpha: f64,
    weights: TargetWeights,
    store: CountStore,
}

impl HistoryTarget {
    pub fn new(alpha: f64, weights: TargetWeights, store: CountStore) -> Result<Self, TargetError> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(TargetError::NegativeAlpha(alpha));
        }
        Ok(HistoryTarget {
            alpha,
            weights,
            store,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &TargetWeights {
        &self.weights
    }

    pub fn store(&self) -> &CountStore {
        &self.store
    }

    pub fn record_visit(&mut self, graph: &Graph, i: NodeId) {
        self.store.record_visit(graph, i);
    }

    /// Count of `node` as seen from the walker sitting at `current`.
    /// Strictly positive by construction.
    pub fn count_from(&mut self, graph: &Graph, current: NodeId, node: NodeId) -> f64 {
        match &mut self.store {
            CountStore::Exact(s) => s.count(graph, node),
            CountStore::Lru(s) => match s.get(node) {
                Some(c) => c,
                None => s.estimate_count(graph, &self.weights, current, node),
            },
        }
    }

    /// `ln pi_tilde_node[x] = ln mu_tilde - alpha (ln x_tilde - ln mu_tilde)`.
    pub fn log_pi_tilde_from(&mut self, graph: &Graph, current: NodeId, node: NodeId) -> f64 {
        let log_mu = self.weights.log_mu_tilde(graph, node);
        let count = self.count_from(graph, current, node);
        debug_assert!(count > 0.0, "visit count must stay positive");
        log_mu - self.alpha * (count.ln() - log_mu)
    }

    /// `pi_tilde_i[x]`, evaluated with the walker at `i` itself.
    pub fn pi_tilde(&mut self, graph: &Graph, i: NodeId) -> f64 {
        self.log_pi_tilde_from(graph, i, i).exp()
    }

    /// `ln(pi_tilde_j / pi_tilde_i)`; antisymmetric in `(i, j)`. `current`
    /// anchors LRU estimates at the walker's position.
    pub fn log_pi_ratio_from(
        &mut self,
        graph: &Graph,
        current: NodeId,
        i: NodeId,
        j: NodeId,
    ) -> f64 {
        self.log_pi_tilde_from(graph, current, j) - self.log_pi_tilde_from(graph, current, i)
    }

    /// `ln(pi_tilde_j / pi_tilde_i)` with the walker at `i`.
    pub fn log_pi_ratio(&mut self, graph: &Graph, i: NodeId, j: NodeId) -> f64 {
        self.log_pi_ratio_from(graph, i, i, j)
    }

    /// `-alpha * ln(x_tilde_i / mu_tilde_i)`, the self-repellency reweighting
    /// applied to kernel rows.
    pub fn log_repellency(&mut self, graph: &Graph, current: NodeId, node: NodeId) -> f64 {
        let log_mu = self.weights.log_mu_tilde(graph, node);
        let count = self.count_from(graph, current, node);
        -self.alpha * (count.ln() - log_mu)
    }

    /// Normalized `pi[x]` over all nodes (dense; small-graph diagnostics).
    pub fn normalized_pi(&mut self, graph: &Graph) -> Vec<f64> {
        let logs: Vec<f64> = graph
            .nodes()
            .map(|i| self.log_pi_tilde_from(graph, i, i))
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = out.iter().sum();
        for v in &mut out {
            *v /= total;
        }
        out
    }
}
