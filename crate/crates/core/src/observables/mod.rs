//! Statistics of weighted co-occurrence networks.
//!
//! Weighted nearest-neighbour degree and weighted clustering follow the
//! usual weighted-network definitions (Barrat et al., 2004):
//!
//! - `k^w_nn,i = (1/s_i) Σ_j w_ij k_j`
//! - `c^w_i = 1/(s_i (k_i - 1)) Σ_{j,h} (w_ij + w_ih)/2 · a_ij a_ih a_jh`,
//!   the sum running over ordered neighbour pairs.
//!
//! Both reduce to their unweighted counterparts when every weight is equal.

mod binning;
mod fit;
mod similarity;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use binning::{log_bin, thin_log_spaced, BinnedPoint, BinnedSeries, LogBins, LOW_SAMPLE};
pub use fit::{fit_power_law, FitResult, Window, MIN_FIT_POINTS};
pub use similarity::{
    cosine_similarity, cosine_similarity_distribution, SimilarityHistogram, DEFAULT_PAIR_BUDGET, EXACT_PAIR_LIMIT,
    SIMILARITY_BINS, SIMILARITY_BIN_WIDTH,
};

use crate::cooc::CoocGraph;
use crate::{Error, NodeId, Result};

/// Compressed adjacency of a [`CoocGraph`] with nodes renumbered densely in
/// increasing id order. Neighbour lists are sorted.
#[derive(Debug, Clone)]
pub struct WeightedAdjacency {
    ids: Vec<NodeId>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u64>,
}

impl WeightedAdjacency {
    pub fn new(g: &CoocGraph) -> Self {
        let ids: Vec<NodeId> = g.nodes().iter().copied().collect();
        let local = |v: NodeId| ids.binary_search(&v).expect("edge endpoint in node set") as u32;
        let edges = g.sorted_edges();
        let mut deg = vec![0usize; ids.len()];
        let mut local_edges = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            let (la, lb) = (local(a), local(b));
            deg[la as usize] += 1;
            deg[lb as usize] += 1;
            local_edges.push((la, lb, w));
        }
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..ids.len()].to_vec();
        let mut targets = vec![0u32; offsets[ids.len()]];
        let mut weights = vec![0u64; offsets[ids.len()]];
        // edges are sorted by (a, b), so each list is filled in increasing order
        // for the `a` side; the `b` side needs a sort afterwards.
        for &(a, b, w) in &local_edges {
            targets[fill[a as usize]] = b;
            weights[fill[a as usize]] = w;
            fill[a as usize] += 1;
            targets[fill[b as usize]] = a;
            weights[fill[b as usize]] = w;
            fill[b as usize] += 1;
        }
        for i in 0..ids.len() {
            let (s, e) = (offsets[i], offsets[i + 1]);
            let mut pairs: Vec<(u32, u64)> = targets[s..e].iter().copied().zip(weights[s..e].iter().copied()).collect();
            pairs.sort_unstable();
            for (k, (t, w)) in pairs.into_iter().enumerate() {
                targets[s + k] = t;
                weights[s + k] = w;
            }
        }
        WeightedAdjacency { ids, offsets, targets, weights }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Original node id of local index `i`.
    pub fn id(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub fn local(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> (&[u32], &[u64]) {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (&self.targets[s..e], &self.weights[s..e])
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn strength(&self, i: usize) -> u64 {
        self.neighbors(i).1.iter().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Edges as local `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.len()).flat_map(move |i| {
            let (t, w) = self.neighbors(i);
            t.iter().zip(w).filter(move |(&j, _)| j as usize > i).map(move |(&j, &w)| (i, j as usize, w))
        })
    }
}

/// Checks `Σ s_i = 2 Σ w_ij` and `Σ k_i = 2 E`.
pub fn check_identities(g: &CoocGraph, adj: &WeightedAdjacency) -> Result<()> {
    let ks: usize = (0..adj.len()).map(|i| adj.degree(i)).sum();
    let ss: u64 = (0..adj.len()).map(|i| adj.strength(i)).sum();
    if ks != 2 * g.edge_count() {
        return Err(Error::Contract(format!("degree sum {ks} != 2 x {} edges", g.edge_count())));
    }
    if ss != 2 * g.total_weight() {
        return Err(Error::Contract(format!("strength sum {ss} != 2 x {} total weight", g.total_weight())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub count: u64,
    /// `count / (sample size × integers in the bin)`; the last bin ends at the
    /// largest observed value.
    pub density: f64,
}

/// Histogram of a positive integer quantity, raw and log-binned.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub raw: BTreeMap<u64, u64>,
    pub binned: Vec<DensityBin>,
    pub sample_size: u64,
}

impl Distribution {
    pub const BIN_RATIO: f64 = 2.0;

    pub fn from_values(values: impl IntoIterator<Item = u64>) -> Self {
        let mut raw = BTreeMap::new();
        for v in values {
            *raw.entry(v).or_insert(0) += 1;
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: BTreeMap<u64, u64>) -> Self {
        let sample_size: u64 = raw.values().sum();
        let positive = raw.range(1..);
        let binned = match binning::bins_for(positive.clone().map(|(&v, _)| v as f64), Self::BIN_RATIO) {
            None => Vec::new(),
            Some(bins) => {
                let mut counts = vec![0u64; bins.count];
                for (&v, &c) in positive {
                    counts[bins.index(v as f64)] += c;
                }
                let max = *raw.keys().next_back().unwrap() as f64;
                (0..bins.count)
                    .filter(|&m| counts[m] > 0)
                    .map(|m| {
                        let (lo, hi) = bins.edges(m);
                        let last = m + 1 == bins.count;
                        let top = if last { max } else { hi.ceil() - 1.0 };
                        let width = (top - lo.ceil() + 1.0).max(1.0);
                        DensityBin {
                            lo,
                            hi,
                            center: bins.center(m),
                            count: counts[m],
                            density: counts[m] as f64 / (sample_size as f64 * width),
                        }
                    })
                    .collect()
            }
        };
        Distribution { raw, binned, sample_size }
    }

    pub fn is_empty(&self) -> bool {
        self.sample_size == 0
    }

    /// Decades spanned by the positive support.
    pub fn decades(&self) -> f64 {
        match (self.raw.range(1..).next(), self.raw.keys().next_back()) {
            (Some((&lo, _)), Some(&hi)) => (hi as f64 / lo as f64).log10(),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Distributions {
    pub degree: Distribution,
    pub strength: Distribution,
    pub weight: Distribution,
}

/// P(k), P(s) over nodes and P(w) over edges.
pub fn degree_strength_weight_distributions(adj: &WeightedAdjacency) -> Distributions {
    Distributions {
        degree: Distribution::from_values((0..adj.len()).map(|i| adj.degree(i) as u64)),
        strength: Distribution::from_values((0..adj.len()).map(|i| adj.strength(i))),
        weight: Distribution::from_values(adj.edges().map(|(_, _, w)| w)),
    }
}

/// Averages a per-node value within degree classes (nodes with `None` are skipped).
fn by_degree(adj: &WeightedAdjacency, values: impl Iterator<Item = Option<f64>>) -> BinnedSeries {
    let mut acc: BTreeMap<usize, (f64, u64)> = BTreeMap::new();
    for (i, v) in values.enumerate() {
        if let Some(v) = v {
            let e = acc.entry(adj.degree(i)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    BinnedSeries::from_groups(acc.into_iter().map(|(k, (s, c))| (k as f64, s / c as f64, c)))
}

/// Mean strength per degree class, `k >= 1`.
pub fn s_of_k(adj: &WeightedAdjacency) -> BinnedSeries {
    by_degree(adj, (0..adj.len()).map(|i| (adj.degree(i) > 0).then(|| adj.strength(i) as f64)))
}

/// Per-node (weighted) average nearest-neighbour degree; `None` for isolated nodes.
pub fn node_knn(adj: &WeightedAdjacency, weighted: bool) -> Vec<Option<f64>> {
    (0..adj.len())
        .map(|i| {
            let (t, w) = adj.neighbors(i);
            if t.is_empty() {
                return None;
            }
            Some(if weighted {
                let s: u64 = w.iter().sum();
                t.iter().zip(w).map(|(&j, &w)| w as f64 * adj.degree(j as usize) as f64).sum::<f64>() / s as f64
            } else {
                t.iter().map(|&j| adj.degree(j as usize) as f64).sum::<f64>() / t.len() as f64
            })
        })
        .collect()
}

pub fn knn_of_k(adj: &WeightedAdjacency, weighted: bool) -> BinnedSeries {
    by_degree(adj, node_knn(adj, weighted).into_iter())
}

/// Per-node (weighted) clustering; `None` when `k < 2`.
pub fn node_clustering(adj: &WeightedAdjacency, weighted: bool) -> Vec<Option<f64>> {
    let n = adj.len();
    // mark[j] = 1 + weight of (i, j) while processing i
    let mut mark = vec![0u64; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (ti, wi) = adj.neighbors(i);
        let k = ti.len();
        if k < 2 {
            out.push(None);
            continue;
        }
        for (&j, &w) in ti.iter().zip(wi) {
            mark[j as usize] = w + 1;
        }
        // each neighbour link (j, h) is seen once from j's side with h > j
        let mut links = 0u64;
        let mut wsum = 0.0f64;
        for (&j, &wij) in ti.iter().zip(wi) {
            let (tj, _) = adj.neighbors(j as usize);
            for &h in tj {
                if h > j && mark[h as usize] > 0 {
                    links += 1;
                    let wih = mark[h as usize] - 1;
                    // ordered pairs (j, h) and (h, j) each contribute (w_ij + w_ih)/2
                    wsum += (wij + wih) as f64;
                }
            }
        }
        for &j in ti {
            mark[j as usize] = 0;
        }
        let kf = k as f64;
        out.push(Some(if weighted {
            let s: u64 = wi.iter().sum();
            wsum / (s as f64 * (kf - 1.0))
        } else {
            links as f64 / (kf * (kf - 1.0) / 2.0)
        }));
    }
    out
}

pub fn clustering_of_k(adj: &WeightedAdjacency, weighted: bool) -> BinnedSeries {
    by_degree(adj, node_clustering(adj, weighted).into_iter())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightDegree {
    /// `(k_i k_j, w_ij)` per edge.
    pub points: Vec<(f64, f64)>,
    pub binned: BinnedSeries,
}

pub fn weight_vs_kikj(adj: &WeightedAdjacency, bin_ratio: f64) -> WeightDegree {
    let points: Vec<(f64, f64)> =
        adj.edges().map(|(i, j, w)| ((adj.degree(i) * adj.degree(j)) as f64, w as f64)).collect();
    let binned = log_bin(&points, bin_ratio);
    WeightDegree { points, binned }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedItem {
    pub rank: u64,
    pub count: u64,
    pub id: NodeId,
}

/// Counts sorted descending (ties by increasing id) with ranks from 1.
/// Zero counts are dropped.
pub fn frequency_rank(counts: impl IntoIterator<Item = (NodeId, u64)>) -> Vec<RankedItem> {
    let mut v: Vec<(NodeId, u64)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().enumerate().map(|(r, (id, count))| RankedItem { rank: r as u64 + 1, count, id }).collect()
}

pub fn rank_points(ranked: &[RankedItem]) -> Vec<(f64, f64)> {
    ranked.iter().map(|r| (r.rank as f64, r.count as f64)).collect()
}
