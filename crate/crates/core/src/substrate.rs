//! Substrate graphs: the undirected, unweighted "semantic space" on which
//! walks are performed.
//!
//! Generators never force connectedness; walkers stay inside the origin's
//! component. All generators are deterministic for a given seed.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, NodeId, Result};

/// RNG stream reserved for graph construction. Walk streams are keyed by
/// walk index and never reach this value.
pub const GRAPH_STREAM: u64 = u64::MAX;

/// Immutable undirected simple graph stored as sorted adjacency lists.
#[derive(Clone, PartialEq, Eq)]
pub struct SubstrateGraph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl fmt::Debug for SubstrateGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubstrateGraph")
            .field("node_count", &self.node_count())
            .field("edge_count", &self.edge_count)
            .finish()
    }
}

impl SubstrateGraph {
    /// Builds a graph from an edge list, rejecting self-loops and
    /// out-of-range endpoints. Duplicate edges are collapsed.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        check_node_count(node_count)?;
        let mut sets = vec![BTreeSet::new(); node_count];
        for (a, b) in edges {
            if a == b {
                return Err(Error::param(format!("self-loop on node {a}")));
            }
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::param(format!("edge ({a}, {b}) out of range for {node_count} nodes")));
            }
            sets[a as usize].insert(b);
            sets[b as usize].insert(a);
        }
        Ok(Self::from_sets(sets))
    }

    fn from_sets(sets: Vec<BTreeSet<NodeId>>) -> Self {
        let adjacency: Vec<Vec<NodeId>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        SubstrateGraph { adjacency, edge_count }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node as usize]
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency.get(a as usize).is_some_and(|adj| adj.binary_search(&b).is_ok())
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            0.0
        } else {
            2.0 * self.edge_count as f64 / self.node_count() as f64
        }
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, adj)| {
            let i = i as NodeId;
            adj.iter().copied().filter(move |&j| j > i).map(move |j| (i, j))
        })
    }

    /// Checks symmetry, absence of self-loops and duplicates, and id range.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Contract(format!("adjacency of {i} not strictly sorted")));
                }
            }
            for &j in adj {
                if j as usize >= n {
                    return Err(Error::Contract(format!("neighbor {j} of {i} out of range")));
                }
                if j as usize == i {
                    return Err(Error::Contract(format!("self-loop on {i}")));
                }
                if !self.has_edge(j, i as NodeId) {
                    return Err(Error::Contract(format!("edge ({i}, {j}) not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Size of the connected component containing `origin`.
    pub fn component_size(&self, origin: NodeId) -> Result<usize> {
        Ok(bfs_rings(self, origin)?.sizes.iter().sum())
    }

    /// Writes the edge-list text format: a `# nodes=<n>` header followed by
    /// one `i<TAB>j` line per edge with `i < j`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# nodes={}", self.node_count())?;
        for (i, j) in self.edges() {
            writeln!(out, "{i}\t{j}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the edge-list format written by [`write_edge_list`](Self::write_edge_list).
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut node_count = None;
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(n) = header_field(comment, "nodes") {
                    node_count = Some(
                        n.parse::<usize>()
                            .map_err(|e| Error::Parse { line: lineno, message: format!("bad node count: {e}") })?,
                    );
                }
                continue;
            }
            let mut parts = trimmed.split('\t');
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(Error::Parse { line: lineno, message: "expected two tab-separated ids".into() }),
            };
            let parse = |s: &str| {
                s.parse::<NodeId>()
                    .map_err(|e| Error::Parse { line: lineno, message: format!("bad node id {s:?}: {e}") })
            };
            edges.push((parse(a)?, parse(b)?));
        }
        let n = match node_count {
            Some(n) => n,
            None => edges.iter().map(|&(a, b)| a.max(b) as usize + 1).max().unwrap_or(0),
        };
        Self::from_edges(n, edges)
    }
}

pub(crate) fn header_field<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    comment.split_whitespace().find_map(|kv| {
        let (k, v) = kv.split_once('=')?;
        (k == key).then_some(v)
    })
}

fn check_node_count(n: usize) -> Result<()> {
    if n > NodeId::MAX as usize {
        return Err(Error::param(format!("node count {n} exceeds id range")));
    }
    Ok(())
}

/// Generator selection for a substrate graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphVariant {
    WattsStrogatz { n: usize, k: usize, p_rewire: f64 },
    RegularTree { z: usize, depth: usize },
    ErdosRenyi { n: usize, mean_degree: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub variant: GraphVariant,
    pub seed: u64,
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        match self.variant {
            GraphVariant::WattsStrogatz { n, k, p_rewire } => validate_ws(n, k, p_rewire),
            GraphVariant::RegularTree { z, depth } => validate_tree(z).and_then(|_| tree_size(z, depth)).map(|_| ()),
            GraphVariant::ErdosRenyi { n, mean_degree } => validate_er(n, mean_degree),
        }
    }

    /// Number of nodes the generator will produce.
    pub fn node_count(&self) -> Result<usize> {
        match self.variant {
            GraphVariant::WattsStrogatz { n, .. } | GraphVariant::ErdosRenyi { n, .. } => Ok(n),
            GraphVariant::RegularTree { z, depth } => tree_size(z, depth),
        }
    }

    pub fn generate(&self) -> Result<SubstrateGraph> {
        match self.variant {
            GraphVariant::WattsStrogatz { n, k, p_rewire } => generate_watts_strogatz(n, k, p_rewire, self.seed),
            GraphVariant::RegularTree { z, depth } => generate_regular_tree(z, depth, self.seed),
            GraphVariant::ErdosRenyi { n, mean_degree } => generate_erdos_renyi(n, mean_degree, self.seed),
        }
    }
}

fn graph_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GRAPH_STREAM);
    rng
}

fn validate_ws(n: usize, k: usize, p: f64) -> Result<()> {
    if !k.is_multiple_of(2) || k < 2 || k >= n {
        return Err(Error::param(format!("watts_strogatz needs even k with 2 <= k < n (k={k}, n={n})")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("rewiring probability {p} outside [0, 1]")));
    }
    check_node_count(n)
}

/// Classic Watts–Strogatz small world: a ring lattice where each node links
/// to its `k/2` nearest neighbours on each side, then every lattice edge
/// `(u, u+j)` has its far endpoint rewired with probability `p_rewire` to a
/// uniform target that is neither `u` nor an existing neighbour of `u`.
/// The edge count `n*k/2` is preserved.
pub fn generate_watts_strogatz(n: usize, k: usize, p_rewire: f64, seed: u64) -> Result<SubstrateGraph> {
    validate_ws(n, k, p_rewire)?;
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v as NodeId);
            adj[v].insert(u as NodeId);
        }
    }
    let mut rng = graph_rng(seed);
    // Rewire layer by layer, as in the original construction.
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = ((u + j) % n) as NodeId;
            if !rng.random_bool(p_rewire) {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            // The lattice edge may already have been rewired away from the other end.
            if !adj[u].contains(&v) {
                continue;
            }
            let target = loop {
                let w = rng.random_range(0..n) as NodeId;
                if w as usize != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            let uid = u as NodeId;
            adj[u].remove(&v);
            adj[v as usize].remove(&uid);
            adj[u].insert(target);
            adj[target as usize].insert(uid);
        }
    }
    Ok(SubstrateGraph::from_sets(adj))
}

fn validate_tree(z: usize) -> Result<()> {
    if z < 1 {
        return Err(Error::param("regular_tree needs z >= 1"));
    }
    Ok(())
}

/// Tree in which every node has `z + 1` neighbours: the root (node 0) has
/// `z + 1` children and every other internal node has `z`, cut at `depth`.
/// Nodes are numbered in breadth-first order. The seed is unused.
pub fn generate_regular_tree(z: usize, depth: usize, _seed: u64) -> Result<SubstrateGraph> {
    validate_tree(z)?;
    let total = tree_size(z, depth)?;

    let mut edges = Vec::with_capacity(total.saturating_sub(1));
    let mut next: NodeId = 1;
    let mut frontier: Vec<NodeId> = vec![0];
    for l in 1..=depth {
        let children = if l == 1 { z + 1 } else { z };
        let mut new_frontier = Vec::with_capacity(frontier.len() * children);
        for &parent in &frontier {
            for _ in 0..children {
                edges.push((parent, next));
                new_frontier.push(next);
                next += 1;
            }
        }
        frontier = new_frontier;
    }
    SubstrateGraph::from_edges(total, edges)
}

fn validate_er(n: usize, mean_degree: f64) -> Result<()> {
    check_node_count(n)?;
    if !mean_degree.is_finite() || mean_degree < 0.0 {
        return Err(Error::param(format!("mean degree {mean_degree} must be finite and >= 0")));
    }
    if n >= 2 && mean_degree > (n - 1) as f64 {
        return Err(Error::param(format!("mean degree {mean_degree} exceeds n-1 = {}", n - 1)));
    }
    if n < 2 && mean_degree > 0.0 {
        return Err(Error::param("positive mean degree needs at least two nodes"));
    }
    Ok(())
}

fn tree_size(z: usize, depth: usize) -> Result<usize> {
    let mut total: usize = 1;
    let mut ring: usize = 1;
    for l in 1..=depth {
        ring = ring.checked_mul(if l == 1 { z + 1 } else { z }).ok_or_else(|| Error::param("tree too large"))?;
        total = total.checked_add(ring).ok_or_else(|| Error::param("tree too large"))?;
    }
    check_node_count(total)?;
    Ok(total)
}

/// G(n, p) with `p = mean_degree / (n - 1)`, drawn with geometric skips over
/// the lower-triangular pair sequence.
pub fn generate_erdos_renyi(n: usize, mean_degree: f64, seed: u64) -> Result<SubstrateGraph> {
    validate_er(n, mean_degree)?;
    let mut edges = Vec::new();
    if n >= 2 && mean_degree > 0.0 {
        let p = (mean_degree / (n - 1) as f64).min(1.0);
        if p >= 1.0 {
            for v in 1..n {
                for w in 0..v {
                    edges.push((w as NodeId, v as NodeId));
                }
            }
        } else {
            let mut rng = graph_rng(seed);
            let log_q = (-p).ln_1p();
            let (mut v, mut w): (usize, i64) = (1, -1);
            while v < n {
                let r: f64 = 1.0 - rng.random::<f64>();
                w += 1 + (r.ln() / log_q).floor() as i64;
                while w >= v as i64 && v < n {
                    w -= v as i64;
                    v += 1;
                }
                if v < n {
                    edges.push((w as NodeId, v as NodeId));
                }
            }
        }
    }
    SubstrateGraph::from_edges(n, edges)
}

/// Populations of the shells at shortest-path distance `l` from an origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingProfile {
    pub origin: NodeId,
    pub sizes: Vec<usize>,
}

impl RingProfile {
    pub fn max_distance(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Number of nodes within distance `l_max` of the origin.
    pub fn ball_size(&self, l_max: usize) -> usize {
        self.sizes.iter().take(l_max + 1).sum()
    }
}

pub fn bfs_rings(graph: &SubstrateGraph, origin: NodeId) -> Result<RingProfile> {
    if origin as usize >= graph.node_count() {
        return Err(Error::param(format!("origin {origin} out of range for {} nodes", graph.node_count())));
    }
    let mut dist = vec![usize::MAX; graph.node_count()];
    let mut sizes = vec![1usize];
    dist[origin as usize] = 0;
    let mut queue = VecDeque::from([origin]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize] + 1;
        for &v in graph.neighbors(u) {
            if dist[v as usize] == usize::MAX {
                dist[v as usize] = d;
                if sizes.len() <= d {
                    sizes.push(0);
                }
                sizes[d] += 1;
                queue.push_back(v);
            }
        }
    }
    Ok(RingProfile { origin, sizes })
}
