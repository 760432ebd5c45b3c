//! Undirected graphs in compressed adjacency form, loaded from SNAP-style
//! edge lists.
//!
//! Nodes are relabeled to dense indices in first-appearance order; the
//! original identifiers are kept for reporting and for label/weight files.
//! Self-loops are dropped at ingestion and duplicate edges merged, so
//! self-transitions only ever arise from accept-reject mechanics.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use thiserror::Error;

/// Dense node index, valid for the graph that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: expected two whitespace-separated node ids, got {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: invalid node id {token:?}")]
    InvalidToken { line: usize, token: String },
    #[error("edge list contains no edges")]
    Empty,
    #[error("node index {index} out of range (graph has {node_count} nodes)")]
    NodeOutOfRange { index: usize, node_count: usize },
    #[error("graph is not connected ({components} components); take the largest component first")]
    Disconnected { components: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Immutable undirected graph with sorted per-node neighbor lists in
/// contiguous storage.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    original_labels: Vec<u64>,
    edge_count: usize,
}

impl Graph {
    /// Build from a deduplicated undirected edge set over dense indices.
    fn from_edges(node_count: usize, edges: &[(u32, u32)], original_labels: Vec<u64>) -> Self {
        let mut degrees = vec![0usize; node_count];
        for &(u, v) in edges {
            degrees[u as usize] += 1;
            degrees[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for &d in &degrees {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![NodeId(0); acc];
        for &(u, v) in edges {
            neighbors[cursor[u as usize]] = NodeId(v);
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize]] = NodeId(u);
            cursor[v as usize] += 1;
        }
        for i in 0..node_count {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            original_labels,
            edge_count: edges.len(),
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edge_count as f64 / self.node_count() as f64
    }

    /// Sorted neighbor list of `i`. Panics if `i` is out of range; use
    /// [`Graph::node`] to validate externally supplied indices.
    #[inline]
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        let i = i.index();
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: NodeId) -> usize {
        let i = i.index();
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Size of the expanded neighborhood (neighbors plus the node itself).
    #[inline]
    pub fn expanded_degree(&self, i: NodeId) -> usize {
        self.degree(i) + 1
    }

    /// Validate a raw index into a `NodeId` owned by this graph.
    pub fn node(&self, index: usize) -> Result<NodeId, GraphError> {
        if index < self.node_count() {
            Ok(NodeId(index as u32))
        } else {
            Err(GraphError::NodeOutOfRange {
                index,
                node_count: self.node_count(),
            })
        }
    }

    /// Checked variant of [`Graph::neighbors`].
    pub fn checked_neighbors(&self, i: NodeId) -> Result<&[NodeId], GraphError> {
        self.node(i.index())?;
        Ok(self.neighbors(i))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as u32).map(NodeId)
    }

    /// Original identifier of a dense node index.
    pub fn original_label(&self, i: NodeId) -> u64 {
        self.original_labels[i.index()]
    }

    pub fn original_labels(&self) -> &[u64] {
        &self.original_labels
    }

    /// Dense index of an original identifier, if present.
    pub fn find_original(&self, label: u64) -> Option<NodeId> {
        self.original_labels
            .iter()
            .position(|&l| l == label)
            .map(|i| NodeId(i as u32))
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        self.component_ids().1 == 1
    }

    /// (component id per node, number of components), by breadth-first search.
    fn component_ids(&self) -> (Vec<u32>, usize) {
        let n = self.node_count();
        let mut comp = vec![u32::MAX; n];
        let mut count = 0u32;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            if comp[start] != u32::MAX {
                continue;
            }
            comp[start] = count;
            queue.push_back(NodeId(start as u32));
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v.index()] == u32::MAX {
                        comp[v.index()] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count as usize)
    }

    /// Induced subgraph on the largest connected component, relabeled
    /// densely in ascending order of the old indices. Ties across equally
    /// sized components go to the one containing the smallest original label.
    pub fn largest_connected_component(&self) -> Graph {
        let (comp, count) = self.component_ids();
        if count <= 1 {
            return self.clone();
        }
        let mut sizes = vec![0usize; count];
        let mut min_label = vec![u64::MAX; count];
        for (i, &c) in comp.iter().enumerate() {
            let c = c as usize;
            sizes[c] += 1;
            min_label[c] = min_label[c].min(self.original_labels[i]);
        }
        let best = (0..count)
            .max_by(|&a, &b| {
                sizes[a]
                    .cmp(&sizes[b])
                    .then(min_label[b].cmp(&min_label[a]))
            })
            .unwrap();

        let mut remap = vec![u32::MAX; self.node_count()];
        let mut labels = Vec::with_capacity(sizes[best]);
        let mut next = 0u32;
        for (i, &c) in comp.iter().enumerate() {
            if c as usize == best {
                remap[i] = next;
                labels.push(self.original_labels[i]);
                next += 1;
            }
        }
        let mut edges = Vec::new();
        for i in 0..self.node_count() {
            if comp[i] as usize != best {
                continue;
            }
            for &j in self.neighbors(NodeId(i as u32)) {
                if (j.index()) > i {
                    edges.push((remap[i], remap[j.index()]));
                }
            }
        }
        Graph::from_edges(sizes[best], &edges, labels)
    }
}

/// Parse a SNAP-style edge list: one `<u> <v>` pair per line, arbitrary
/// whitespace, `#`-prefixed comment lines ignored. Returns a simple
/// undirected graph (possibly disconnected); `symmetrize` treats each line
/// as a directed arc and inserts its reverse, which with undirected storage
/// yields the same edge set either way.
pub fn load_edge_list<R: BufRead>(source: R, symmetrize: bool) -> Result<Graph, GraphError> {
    // With undirected simple-graph storage the reverse of every arc merges
    // with its forward twin, so both flag values yield the same edge set.
    let _ = symmetrize;
    let mut label_to_index: HashMap<u64, u32> = HashMap::new();
    let mut labels: Vec<u64> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut seen: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();

    let mut intern = |label: u64, labels: &mut Vec<u64>| -> u32 {
        *label_to_index.entry(label).or_insert_with(|| {
            labels.push(label);
            (labels.len() - 1) as u32
        })
    };

    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(GraphError::MalformedLine {
                    line: lineno + 1,
                    content: trimmed.to_string(),
                })
            }
        };
        let parse = |tok: &str| -> Result<u64, GraphError> {
            tok.parse::<u64>().map_err(|_| GraphError::InvalidToken {
                line: lineno + 1,
                token: tok.to_string(),
            })
        };
        let (u_label, v_label) = (parse(a)?, parse(b)?);
        let u = intern(u_label, &mut labels);
        let v = intern(v_label, &mut labels);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }

    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    Ok(Graph::from_edges(labels.len(), &edges, labels))
}
