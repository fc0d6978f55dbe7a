//! Walk ensembles from a fixed origin.
//!
//! Every walk draws from its own ChaCha stream keyed by `(master seed, walk
//! index)`, so ensembles are reproducible regardless of how many worker
//! threads generate them. Reductions into the Heaps curve and visit
//! frequencies happen in walk order.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::substrate::SubstrateGraph;
use crate::{Error, NodeId, Result};

/// Walks generated per parallel batch before the ordered reduction.
const BATCH: usize = 4096;

/// The Heaps curve is recorded after every walk up to this count and at
/// log-spaced checkpoints afterwards.
pub const DENSE_CHECKPOINTS: u64 = 1000;
pub const CHECKPOINTS_PER_DECADE: u32 = 50;

/// Distribution of walk lengths, counted in steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthSpec {
    Fixed {
        l: usize,
    },
    /// `P(l) ∝ l^-b` on `[l_min, l_max]`.
    PowerLaw {
        b: f64,
        #[serde(default = "default_l_min")]
        l_min: usize,
        #[serde(default = "default_l_max")]
        l_max: usize,
    },
}

fn default_l_min() -> usize {
    LengthSpec::DEFAULT_L_MIN
}

fn default_l_max() -> usize {
    LengthSpec::DEFAULT_L_MAX
}

impl LengthSpec {
    pub const DEFAULT_L_MIN: usize = 1;
    pub const DEFAULT_L_MAX: usize = 1000;

    pub fn power_law(b: f64) -> Self {
        LengthSpec::PowerLaw { b, l_min: Self::DEFAULT_L_MIN, l_max: Self::DEFAULT_L_MAX }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthSpec::Fixed { l } if l < 1 => Err(Error::param("fixed walk length must be >= 1")),
            LengthSpec::Fixed { .. } => Ok(()),
            LengthSpec::PowerLaw { b, l_min, l_max } => {
                if !(b > 1.0 && b.is_finite()) {
                    return Err(Error::param(format!("power-law exponent b={b} must be > 1")));
                }
                if l_min < 1 || l_max < l_min {
                    return Err(Error::param(format!("need 1 <= l_min <= l_max (got {l_min}, {l_max})")));
                }
                Ok(())
            }
        }
    }

    pub fn max_length(&self) -> usize {
        match *self {
            LengthSpec::Fixed { l } => l,
            LengthSpec::PowerLaw { l_max, .. } => l_max,
        }
    }

    /// Normalised probabilities indexed by length, `0..=max_length()`.
    pub fn probabilities(&self) -> Vec<f64> {
        match *self {
            LengthSpec::Fixed { l } => {
                let mut p = vec![0.0; l + 1];
                p[l] = 1.0;
                p
            }
            LengthSpec::PowerLaw { b, l_min, l_max } => {
                let mut p = vec![0.0; l_max + 1];
                // summed smallest-first
                let z: f64 = (l_min..=l_max).rev().map(|l| (l as f64).powf(-b)).sum();
                for (l, slot) in p.iter_mut().enumerate().skip(l_min) {
                    *slot = (l as f64).powf(-b) / z;
                }
                p
            }
        }
    }

    /// `P_>(l) = Σ_{l' >= l} P(l')` for `l` in `0..=max_length()`.
    pub fn tail_probabilities(&self) -> Vec<f64> {
        let p = self.probabilities();
        let mut tail = vec![0.0; p.len()];
        let mut acc = 0.0;
        for l in (0..p.len()).rev() {
            acc += p[l];
            tail[l] = acc;
        }
        // Every walk covers length 0 and all lengths below its minimum.
        let l_min = match *self {
            LengthSpec::Fixed { l } => l,
            LengthSpec::PowerLaw { l_min, .. } => l_min,
        };
        for t in tail.iter_mut().take(l_min + 1) {
            *t = 1.0;
        }
        tail
    }

    pub fn sampler(&self) -> Result<LengthSampler> {
        self.validate()?;
        Ok(match *self {
            LengthSpec::Fixed { l } => LengthSampler::Fixed(l),
            LengthSpec::PowerLaw { l_min, .. } => {
                let p = self.probabilities();
                let mut cdf = Vec::with_capacity(p.len() - l_min);
                let mut acc = 0.0;
                for &x in &p[l_min..] {
                    acc += x;
                    cdf.push(acc);
                }
                LengthSampler::Table { l_min, cdf }
            }
        })
    }
}

/// Inverse-CDF sampler over the finite length support.
#[derive(Debug, Clone)]
pub enum LengthSampler {
    Fixed(usize),
    Table { l_min: usize, cdf: Vec<f64> },
}

impl LengthSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            LengthSampler::Fixed(l) => *l,
            LengthSampler::Table { l_min, cdf } => {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                l_min + idx
            }
        }
    }
}

pub fn sample_length<R: Rng + ?Sized>(spec: &LengthSpec, rng: &mut R) -> Result<usize> {
    Ok(spec.sampler()?.sample(rng))
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub origin: NodeId,
    pub n_rw: u64,
    pub lengths: LengthSpec,
    pub seed: u64,
    /// Include the origin in distinct counts, frequencies and cliques.
    #[serde(default = "default_true")]
    pub count_origin: bool,
    #[serde(default)]
    pub non_backtracking: bool,
}

impl WalkConfig {
    pub fn new(origin: NodeId, n_rw: u64, lengths: LengthSpec, seed: u64) -> Self {
        WalkConfig { origin, n_rw, lengths, seed, count_origin: true, non_backtracking: false }
    }

    pub fn validate(&self, graph: &SubstrateGraph) -> Result<()> {
        if self.origin as usize >= graph.node_count() {
            return Err(Error::param(format!("origin {} out of range for {} nodes", self.origin, graph.node_count())));
        }
        self.lengths.validate()
    }
}

/// RNG for walk `index` of an ensemble with master seed `seed`.
pub fn walk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTrace {
    pub nodes: Vec<NodeId>,
    /// Set when the walk could not take its requested steps (isolated origin).
    pub truncated: bool,
}

impl WalkTrace {
    pub fn origin(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Distinct visited nodes in first-visit order, optionally dropping the origin.
    pub fn distinct_nodes(&self, count_origin: bool) -> Vec<NodeId> {
        let origin = self.origin();
        let mut seen = HashSet::with_capacity(self.nodes.len());
        self.nodes.iter().copied().filter(|&v| (count_origin || v != origin) && seen.insert(v)).collect()
    }
}

/// One unbiased walk of `steps` steps; each step moves to a uniform neighbour.
pub fn run_walk<R: Rng + ?Sized>(graph: &SubstrateGraph, origin: NodeId, steps: usize, rng: &mut R) -> WalkTrace {
    run_walk_with(graph, origin, steps, false, rng)
}

/// As [`run_walk`], optionally forbidding immediate backtracking unless the
/// current node is a leaf.
pub fn run_walk_with<R: Rng + ?Sized>(
    graph: &SubstrateGraph,
    origin: NodeId,
    steps: usize,
    non_backtracking: bool,
    rng: &mut R,
) -> WalkTrace {
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(origin);
    if steps > 0 && graph.degree(origin) == 0 {
        return WalkTrace { nodes, truncated: true };
    }
    let mut prev: Option<NodeId> = None;
    let mut cur = origin;
    for _ in 0..steps {
        let nbrs = graph.neighbors(cur);
        let next = match prev {
            Some(p) if non_backtracking && nbrs.len() > 1 => {
                let back = nbrs.binary_search(&p).expect("previous node is a neighbour");
                let i = rng.random_range(0..nbrs.len() - 1);
                nbrs[if i >= back { i + 1 } else { i }]
            }
            _ => nbrs[rng.random_range(0..nbrs.len())],
        };
        prev = Some(cur);
        cur = next;
        nodes.push(cur);
    }
    WalkTrace { nodes, truncated: false }
}

/// Vocabulary growth: `(walks performed, distinct nodes so far)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeapsCurve {
    pub points: Vec<(u64, u64)>,
}

impl HeapsCurve {
    pub fn last(&self) -> Option<(u64, u64)> {
        self.points.last().copied()
    }

    pub fn as_f64(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|&(n, d)| (n as f64, d as f64)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n_rw,n_distinct")?;
        for (n, d) in &self.points {
            writeln!(out, "{n},{d}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with("n_rw") {
                continue;
            }
            let bad = || Error::Parse { line: idx + 1, message: format!("bad heaps row {t:?}") };
            let (a, b) = t.split_once(',').ok_or_else(bad)?;
            points.push((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
        }
        Ok(HeapsCurve { points })
    }
}

/// Walk counts at which the Heaps curve is recorded: every walk up to
/// [`DENSE_CHECKPOINTS`], then the first integer at or above each target
/// `1000 * 10^(j / CHECKPOINTS_PER_DECADE)`.
#[derive(Debug, Clone)]
struct Checkpoints {
    j: u32,
    next: u64,
}

impl Checkpoints {
    fn new() -> Self {
        Checkpoints { j: 1, next: Self::target(1) }
    }

    fn target(j: u32) -> u64 {
        (DENSE_CHECKPOINTS as f64 * 10f64.powf(j as f64 / CHECKPOINTS_PER_DECADE as f64)).ceil() as u64
    }

    /// True if `n` is a checkpoint; `n` must be visited in increasing order.
    fn hit(&mut self, n: u64) -> bool {
        if n <= DENSE_CHECKPOINTS {
            return true;
        }
        if n < self.next {
            return false;
        }
        while Self::target(self.j) <= n {
            self.j += 1;
        }
        self.next = Self::target(self.j);
        true
    }
}

/// Number of walks (out of the ensemble) that visited each node at least once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitFrequencies {
    pub counts: Vec<u64>,
}

impl VisitFrequencies {
    pub fn nonzero(&self) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as NodeId, c))
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub traces: Vec<WalkTrace>,
    pub heaps: HeapsCurve,
    pub frequencies: VisitFrequencies,
    pub count_origin: bool,
}

/// Generates walk `index` of the ensemble described by `config`.
pub fn ensemble_walk(graph: &SubstrateGraph, config: &WalkConfig, sampler: &LengthSampler, index: u64) -> WalkTrace {
    let mut rng = walk_rng(config.seed, index);
    let steps = sampler.sample(&mut rng);
    run_walk_with(graph, config.origin, steps, config.non_backtracking, &mut rng)
}

/// Runs `config.n_rw` walks, recording traces, the Heaps curve and visit
/// frequencies. Uses the current rayon pool; results do not depend on it.
pub fn run_ensemble(graph: &SubstrateGraph, config: &WalkConfig) -> Result<Ensemble> {
    let mut traces = Vec::with_capacity(config.n_rw.min(1 << 24) as usize);
    let (heaps, frequencies) = run_ensemble_with(graph, config, |t| traces.push(t))?;
    Ok(Ensemble { traces, heaps, frequencies, count_origin: config.count_origin })
}

/// Streaming form of [`run_ensemble`]: every trace is handed to `sink` in
/// walk order instead of being stored.
pub fn run_ensemble_with<F: FnMut(WalkTrace)>(
    graph: &SubstrateGraph,
    config: &WalkConfig,
    mut sink: F,
) -> Result<(HeapsCurve, VisitFrequencies)> {
    config.validate(graph)?;
    let sampler = config.lengths.sampler()?;
    let n = graph.node_count();
    let mut counts = vec![0u64; n];
    // stamp[v] = 1 + index of the last walk that touched v
    let mut stamp = vec![0u64; n];
    let mut seen = vec![false; n];
    let mut distinct = 0u64;
    let mut points = Vec::new();
    let mut checkpoints = Checkpoints::new();

    let mut start = 0u64;
    while start < config.n_rw {
        let end = (start + BATCH as u64).min(config.n_rw);
        let batch: Vec<WalkTrace> =
            (start..end).into_par_iter().map(|i| ensemble_walk(graph, config, &sampler, i)).collect();
        for (offset, trace) in batch.into_iter().enumerate() {
            let walk_no = start + offset as u64 + 1;
            for &v in &trace.nodes {
                let vi = v as usize;
                if (!config.count_origin && v == config.origin) || stamp[vi] == walk_no {
                    continue;
                }
                stamp[vi] = walk_no;
                counts[vi] += 1;
                if !seen[vi] {
                    seen[vi] = true;
                    distinct += 1;
                }
            }
            if checkpoints.hit(walk_no) || walk_no == config.n_rw {
                points.push((walk_no, distinct));
            }
            sink(trace);
        }
        start = end;
    }
    Ok((HeapsCurve { points }, VisitFrequencies { counts }))
}

/// Histogram of realised walk lengths (steps).
pub fn trace_lengths_histogram<'a>(traces: impl IntoIterator<Item = &'a WalkTrace>) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for t in traces {
        *hist.entry(t.steps()).or_insert(0) += 1;
    }
    hist
}

/// One walk per line, node ids separated by single spaces.
pub fn write_traces<'a, W: Write>(traces: impl IntoIterator<Item = &'a WalkTrace>, mut out: W) -> Result<()> {
    for t in traces {
        let mut first = true;
        for v in &t.nodes {
            if !first {
                out.write_all(b" ")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_traces<R: BufRead>(input: R) -> Result<Vec<WalkTrace>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nodes = line
            .split_whitespace()
            .map(|s| s.parse::<NodeId>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
        out.push(WalkTrace { nodes, truncated: false });
    }
    Ok(out)
}
