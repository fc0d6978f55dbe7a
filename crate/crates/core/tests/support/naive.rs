//! Brute-force reference implementations on dense weight matrices.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use semwalk::cooc::CoocGraph;
use semwalk::walker::WalkTrace;

/// Pair counts by sorting each trace's nodes and enumerating all pairs.
pub fn pair_counts(traces: &[WalkTrace], count_origin: bool) -> (BTreeSet<u32>, BTreeMap<(u32, u32), u64>) {
    let mut nodes = BTreeSet::new();
    let mut pairs = BTreeMap::new();
    for t in traces {
        let origin = t.nodes[0];
        let mut v: Vec<u32> = t.nodes.iter().copied().filter(|&x| count_origin || x != origin).collect();
        v.sort();
        v.dedup();
        nodes.extend(v.iter().copied());
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                *pairs.entry((v[i], v[j])).or_insert(0) += 1;
            }
        }
    }
    (nodes, pairs)
}

pub struct Dense {
    pub ids: Vec<u32>,
    pub w: Vec<Vec<u64>>,
}

impl Dense {
    pub fn new(g: &CoocGraph) -> Self {
        let ids: Vec<u32> = g.nodes().iter().copied().collect();
        let w = ids.iter().map(|&a| ids.iter().map(|&b| g.weight(a, b)).collect()).collect();
        Dense { ids, w }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.w[i].iter().filter(|&&w| w > 0).count()
    }

    pub fn strength(&self, i: usize) -> u64 {
        self.w[i].iter().sum()
    }

    pub fn knn(&self, i: usize, weighted: bool) -> Option<f64> {
        let k = self.degree(i);
        if k == 0 {
            return None;
        }
        let mut num = 0.0;
        for j in 0..self.len() {
            if self.w[i][j] > 0 {
                let f = if weighted { self.w[i][j] as f64 } else { 1.0 };
                num += f * self.degree(j) as f64;
            }
        }
        Some(num / if weighted { self.strength(i) as f64 } else { k as f64 })
    }

    pub fn clustering(&self, i: usize, weighted: bool) -> Option<f64> {
        let k = self.degree(i);
        if k < 2 {
            return None;
        }
        let mut sum = 0.0;
        for j in 0..self.len() {
            for h in 0..self.len() {
                if j != h && self.w[i][j] > 0 && self.w[i][h] > 0 && self.w[j][h] > 0 {
                    sum += if weighted { (self.w[i][j] + self.w[i][h]) as f64 / 2.0 } else { 1.0 };
                }
            }
        }
        let k = k as f64;
        Some(if weighted { sum / (self.strength(i) as f64 * (k - 1.0)) } else { sum / (k * (k - 1.0)) })
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let dot: f64 = (0..self.len()).map(|j| self.w[a][j] as f64 * self.w[b][j] as f64).sum();
        let na: f64 = (0..self.len()).map(|j| (self.w[a][j] as f64).powi(2)).sum();
        let nb: f64 = (0..self.len()).map(|j| (self.w[b][j] as f64).powi(2)).sum();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb).sqrt()
        }
    }

    /// Mean of `f` per degree class, skipping `None`.
    pub fn by_degree(&self, f: impl Fn(usize) -> Option<f64>) -> BTreeMap<usize, (f64, u64)> {
        let mut acc: BTreeMap<usize, (f64, u64)> = BTreeMap::new();
        for i in 0..self.len() {
            if let Some(v) = f(i) {
                let e = acc.entry(self.degree(i)).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        acc.into_iter().map(|(k, (s, c))| (k, (s / c as f64, c))).collect()
    }

    /// `(k_i k_j, w_ij)` over unordered linked pairs, sorted.
    pub fn weight_degree(&self) -> Vec<(f64, f64)> {
        let mut v = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.w[i][j] > 0 {
                    v.push(((self.degree(i) * self.degree(j)) as f64, self.w[i][j] as f64));
                }
            }
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// `(count, id)` sorted by decreasing count then increasing id, zeros dropped.
pub fn ranks(counts: &[(u32, u64)]) -> Vec<(u64, u32)> {
    let mut v: Vec<(u64, u32)> = counts.iter().filter(|c| c.1 > 0).map(|&(id, c)| (c, id)).collect();
    v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    v
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn series_matches(
    name: &str,
    lib: &semwalk::observables::BinnedSeries,
    naive: &BTreeMap<usize, (f64, u64)>,
) -> Result<(), String> {
    if lib.points.len() != naive.len() {
        return Err(format!("{name}: {} classes vs {} naive", lib.points.len(), naive.len()));
    }
    for (p, (&k, &(y, c))) in lib.points.iter().zip(naive) {
        if p.x != k as f64 || p.count != c || !close(p.y, y, 1e-9) {
            return Err(format!("{name}: ({}, {}, {}) vs naive ({k}, {y}, {c})", p.x, p.y, p.count));
        }
    }
    Ok(())
}

/// Compares the co-occurrence builders and every observable with the
/// brute-force references. Integers must match exactly, floats to 1e-9.
pub fn check_ensemble(traces: &[WalkTrace], count_origin: bool, frequencies: &[(u32, u64)]) -> Result<(), String> {
    use semwalk::cooc::{build_from_traces, build_from_traces_par};
    use semwalk::observables::*;

    let g = build_from_traces(traces, count_origin);
    let (nodes, pairs) = pair_counts(traces, count_origin);
    if g.nodes() != &nodes {
        return Err("node sets differ".into());
    }
    let edges: BTreeMap<(u32, u32), u64> = g.sorted_edges().into_iter().map(|(a, b, w)| ((a, b), w)).collect();
    if edges != pairs {
        return Err("edge weights differ from pair counts".into());
    }
    if build_from_traces_par(traces, count_origin) != g {
        return Err("parallel builder differs".into());
    }

    let adj = WeightedAdjacency::new(&g);
    let d = Dense::new(&g);
    check_identities(&g, &adj).map_err(|e| e.to_string())?;
    for i in 0..d.len() {
        if adj.degree(i) != d.degree(i) || adj.strength(i) != d.strength(i) {
            return Err(format!("degree/strength of node {}", d.ids[i]));
        }
        if adj.strength(i) < adj.degree(i) as u64 {
            return Err("strength below degree".into());
        }
    }

    let dist = degree_strength_weight_distributions(&adj);
    let count = |vals: Vec<u64>| {
        let mut m = BTreeMap::new();
        for v in vals {
            *m.entry(v).or_insert(0u64) += 1;
        }
        m
    };
    if dist.degree.raw != count((0..d.len()).map(|i| d.degree(i) as u64).collect())
        || dist.strength.raw != count((0..d.len()).map(|i| d.strength(i)).collect())
        || dist.weight.raw != count(pairs.values().copied().collect())
    {
        return Err("raw distributions differ".into());
    }
    for dd in [&dist.degree, &dist.strength, &dist.weight] {
        if dd.binned.iter().map(|b| b.count).sum::<u64>() != dd.raw.range(1..).map(|(_, c)| c).sum::<u64>() {
            return Err("binned counts do not add up".into());
        }
    }

    series_matches("s(k)", &s_of_k(&adj), &d.by_degree(|i| (d.degree(i) > 0).then(|| d.strength(i) as f64)))?;
    for weighted in [false, true] {
        series_matches("knn", &knn_of_k(&adj, weighted), &d.by_degree(|i| d.knn(i, weighted)))?;
        series_matches("C", &clustering_of_k(&adj, weighted), &d.by_degree(|i| d.clustering(i, weighted)))?;
        let per_node = node_clustering(&adj, weighted);
        for (i, v) in per_node.iter().enumerate() {
            match (v, d.clustering(i, weighted)) {
                (None, None) => {}
                (Some(a), Some(b)) if close(*a, b, 1e-9) => {}
                other => return Err(format!("clustering of node {}: {other:?}", d.ids[i])),
            }
        }
    }

    let mut wd = weight_vs_kikj(&adj, 2.0).points;
    wd.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if wd != d.weight_degree() {
        return Err("weight-degree scatter differs".into());
    }

    let linked: Vec<usize> = (0..d.len()).filter(|&i| d.degree(i) > 0).collect();
    let mut naive_hist = vec![0u64; SIMILARITY_BINS];
    let mut ambiguous = 0u64;
    for (x, &a) in linked.iter().enumerate() {
        for &b in &linked[x + 1..] {
            let s = d.cosine(a, b);
            if !close(cosine_similarity(&adj, a, b), s, 1e-9) {
                return Err(format!("cosine({a}, {b})"));
            }
            let pos = s / SIMILARITY_BIN_WIDTH;
            if (pos - pos.round()).abs() < 1e-9 && pos.round() > 0.0 && pos.round() < SIMILARITY_BINS as f64 {
                ambiguous += 1;
            } else {
                naive_hist[(pos.floor() as usize).min(SIMILARITY_BINS - 1)] += 1;
            }
        }
    }
    if linked.len() <= EXACT_PAIR_LIMIT {
        let h = cosine_similarity_distribution(&adj, DEFAULT_PAIR_BUDGET, 0);
        let n = linked.len() as u64;
        if !h.exhaustive || h.pairs != n * n.saturating_sub(1) / 2 {
            return Err("similarity histogram pair count".into());
        }
        let off: u64 = h.counts.iter().zip(&naive_hist).map(|(a, b)| a.abs_diff(*b)).sum();
        if off > 2 * ambiguous {
            return Err(format!("similarity histogram {:?} vs naive {naive_hist:?}", h.counts));
        }
    }

    let lib_ranks: Vec<(u64, u32)> =
        frequency_rank(frequencies.iter().copied()).iter().map(|r| (r.count, r.id)).collect();
    if lib_ranks != ranks(frequencies) {
        return Err("frequency ranks differ".into());
    }
    Ok(())
}
