//! Weighted co-occurrence networks by clique projection.
//!
//! Each walk (or post) contributes a clique over its distinct nodes (tags);
//! the weight of a pair is the number of distinct walks (posts) in which
//! both appear.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::substrate::header_field;
use crate::walker::WalkTrace;
use crate::{Error, NodeId, Result};

/// Traces per private accumulator in the parallel builder.
const CHUNK: usize = 2048;

#[inline]
fn key(a: NodeId, b: NodeId) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

#[inline]
fn unkey(k: u64) -> (NodeId, NodeId) {
    ((k >> 32) as NodeId, k as NodeId)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoocGraph {
    nodes: BTreeSet<NodeId>,
    weights: HashMap<u64, u64>,
}

impl CoocGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one clique over `members`, which must already be distinct.
    pub fn add_clique(&mut self, members: &[NodeId]) {
        for (i, &a) in members.iter().enumerate() {
            self.nodes.insert(a);
            for &b in &members[i + 1..] {
                debug_assert_ne!(a, b);
                *self.weights.entry(key(a, b)).or_insert(0) += 1;
            }
        }
    }

    /// Adds `w` to the weight of edge `(a, b)`; both endpoints join the node set.
    pub fn add_weight(&mut self, a: NodeId, b: NodeId, w: u64) -> Result<()> {
        if a == b {
            return Err(Error::Contract(format!("self-loop on {a}")));
        }
        if w == 0 {
            return Err(Error::Contract(format!("zero weight on ({a}, {b})")));
        }
        self.nodes.insert(a);
        self.nodes.insert(b);
        *self.weights.entry(key(a, b)).or_insert(0) += w;
        Ok(())
    }

    pub fn add_node(&mut self, v: NodeId) {
        self.nodes.insert(v);
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> u64 {
        if a == b {
            return 0;
        }
        self.weights.get(&key(a, b)).copied().unwrap_or(0)
    }

    /// Edges `(i, j, w)` with `i < j`, sorted lexicographically.
    pub fn sorted_edges(&self) -> Vec<(NodeId, NodeId, u64)> {
        let mut keys: Vec<(u64, u64)> = self.weights.iter().map(|(&k, &w)| (k, w)).collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|(k, w)| {
                let (a, b) = unkey(k);
                (a, b, w)
            })
            .collect()
    }

    /// Node union with edge weights added.
    pub fn merge(self, other: CoocGraph) -> CoocGraph {
        let (mut big, small) = if self.weights.len() >= other.weights.len() { (self, other) } else { (other, self) };
        big.nodes.extend(small.nodes);
        for (k, w) in small.weights {
            *big.weights.entry(k).or_insert(0) += w;
        }
        big
    }

    /// Weighted edge list: header `# nodes=<n> edges=<m> total_weight=<W>`,
    /// then `i<TAB>j<TAB>w` lines sorted with `i < j`. Nodes without edges
    /// are listed as `# isolated=<id>` comments so the node set round-trips.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# nodes={} edges={} total_weight={}",
            self.node_count(),
            self.edge_count(),
            self.total_weight()
        )?;
        let mut touched = BTreeSet::new();
        let edges = self.sorted_edges();
        for &(a, b, _) in &edges {
            touched.insert(a);
            touched.insert(b);
        }
        for v in self.nodes.difference(&touched) {
            writeln!(out, "# isolated={v}")?;
        }
        for (a, b, w) in edges {
            writeln!(out, "{a}\t{b}\t{w}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut g = CoocGraph::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let perr = |m: String| Error::Parse { line: lineno, message: m };
            if let Some(c) = t.strip_prefix('#') {
                if let Some(v) = header_field(c, "isolated") {
                    g.add_node(v.parse().map_err(|e| perr(format!("bad node id: {e}")))?);
                }
                continue;
            }
            let f: Vec<&str> = t.split('\t').collect();
            if f.len() != 3 {
                return Err(perr(format!("expected 3 fields, got {}", f.len())));
            }
            let a: NodeId = f[0].parse().map_err(|e| perr(format!("bad id: {e}")))?;
            let b: NodeId = f[1].parse().map_err(|e| perr(format!("bad id: {e}")))?;
            let w: u64 = f[2].parse().map_err(|e| perr(format!("bad weight: {e}")))?;
            g.add_weight(a, b, w).map_err(|e| perr(e.to_string()))?;
        }
        Ok(g)
    }
}

/// Clique projection of walk traces. With `count_origin == false` the
/// origin of every trace is left out of its clique.
pub fn build_from_traces<'a>(traces: impl IntoIterator<Item = &'a WalkTrace>, count_origin: bool) -> CoocGraph {
    let mut g = CoocGraph::new();
    for t in traces {
        g.add_clique(&t.distinct_nodes(count_origin));
    }
    g
}

/// Parallel form of [`build_from_traces`]; identical output.
pub fn build_from_traces_par(traces: &[WalkTrace], count_origin: bool) -> CoocGraph {
    traces
        .par_chunks(CHUNK)
        .map(|chunk| build_from_traces(chunk, count_origin))
        .reduce(CoocGraph::new, CoocGraph::merge)
}

/// Dense ids for tag strings, assigned in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagIndex {
    labels: Vec<String>,
    ids: HashMap<String, NodeId>,
}

impl TagIndex {
    pub fn intern(&mut self, tag: &str) -> NodeId {
        if let Some(&id) = self.ids.get(tag) {
            return id;
        }
        let id = self.labels.len() as NodeId;
        self.labels.push(tag.to_owned());
        self.ids.insert(tag.to_owned(), id);
        id
    }

    pub fn id(&self, tag: &str) -> Option<NodeId> {
        self.ids.get(tag).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `id<TAB>tag` per line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "{i}\t{l}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Clique projection of posts around `focus`: every post's tag set minus
/// the focus tag becomes a clique. Every post must contain `focus`.
pub fn build_from_posts<'a, I>(posts: I, focus: &str) -> Result<(CoocGraph, TagIndex)>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    let mut g = CoocGraph::new();
    let mut index = TagIndex::default();
    let mut members = Vec::new();
    for (n, tags) in posts.into_iter().enumerate() {
        if !tags.contains(focus) {
            return Err(Error::Contract(format!("post #{n} does not contain focus tag {focus:?}")));
        }
        members.clear();
        members.extend(tags.iter().filter(|t| t.as_str() != focus).map(|t| index.intern(t)));
        g.add_clique(&members);
    }
    Ok((g, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(nodes: &[NodeId]) -> WalkTrace {
        WalkTrace { nodes: nodes.to_vec(), truncated: false }
    }

    fn tags(ts: &[&str]) -> BTreeSet<String> {
        ts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_walk_is_a_clique() {
        let g = build_from_traces(&[trace(&[0, 1, 2])], true);
        assert_eq!(g.sorted_edges(), vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)]);
    }

    #[test]
    fn revisits_collapse() {
        let g = build_from_traces(&[trace(&[0, 1, 0])], true);
        assert_eq!(g.sorted_edges(), vec![(0, 1, 1)]);
        assert_eq!(g.weight(0, 0), 0);
    }

    #[test]
    fn pair_counts_over_two_walks() {
        let g = build_from_traces(&[trace(&[0, 1, 2]), trace(&[0, 1, 3])], true);
        assert_eq!(g.weight(0, 1), 2);
        for (a, b) in [(0, 2), (1, 2), (0, 3), (1, 3)] {
            assert_eq!(g.weight(a, b), 1);
        }
        assert_eq!(g.weight(2, 3), 0);
        assert_eq!(g.edge_count(), 5);
    }

    #[test]
    fn origin_can_be_left_out() {
        let g = build_from_traces(&[trace(&[0, 1, 0, 2])], false);
        assert_eq!(g.sorted_edges(), vec![(1, 2, 1)]);
        assert!(!g.nodes().contains(&0));
    }

    #[test]
    fn posts_around_focus() {
        let posts = [tags(&["t", "a", "b"]), tags(&["t", "a", "c"])];
        let (g, idx) = build_from_posts(&posts, "t").unwrap();
        let id = |s| idx.id(s).unwrap();
        assert_eq!(g.weight(id("a"), id("b")), 1);
        assert_eq!(g.weight(id("a"), id("c")), 1);
        assert_eq!(g.weight(id("b"), id("c")), 0);
        assert!(idx.id("t").is_none());

        let (g, idx) = build_from_posts(&[tags(&["t", "a"])], "t").unwrap();
        assert_eq!((g.node_count(), g.edge_count(), idx.len()), (1, 0, 1));

        assert!(matches!(build_from_posts(&[tags(&["a", "b"])], "t"), Err(Error::Contract(_))));
    }

    #[test]
    fn merge_identity_and_commutativity() {
        let g1 = build_from_traces(&[trace(&[0, 1, 2]), trace(&[4, 5])], true);
        let g2 = build_from_traces(&[trace(&[1, 2, 3])], true);
        assert_eq!(g1.clone().merge(CoocGraph::new()), g1);
        assert_eq!(CoocGraph::new().merge(g1.clone()), g1);
        let a = g1.clone().merge(g2.clone());
        let b = g2.merge(g1);
        assert_eq!(a.sorted_edges(), b.sorted_edges());
        assert_eq!(a, b);
        assert_eq!(a.weight(1, 2), 2);
    }

    #[test]
    fn edge_list_round_trip() {
        let mut g = build_from_traces(&[trace(&[0, 1, 2]), trace(&[0, 1, 3])], true);
        g.add_node(9);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# nodes=5 edges=5 total_weight=6\n"));
        assert!(text.contains("0\t1\t2\n"));
        let back = CoocGraph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(back, g);
    }
}
