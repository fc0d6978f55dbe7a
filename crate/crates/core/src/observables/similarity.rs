//! Cosine similarity between the weight vectors of node pairs.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WeightedAdjacency;

pub const SIMILARITY_BIN_WIDTH: f64 = 0.05;
pub const SIMILARITY_BINS: usize = 20;
/// Above this many nodes (with non-zero strength) pairs are sampled.
pub const EXACT_PAIR_LIMIT: usize = 2000;
pub const DEFAULT_PAIR_BUDGET: u64 = 1_000_000;

/// `Σ_j w_aj w_bj / sqrt(Σ w_a² Σ w_b²)` for local indices `a`, `b`.
/// Returns 0 when either node has no links.
pub fn cosine_similarity(adj: &WeightedAdjacency, a: usize, b: usize) -> f64 {
    let (ta, wa) = adj.neighbors(a);
    let (tb, wb) = adj.neighbors(b);
    let na: f64 = wa.iter().map(|&w| (w as f64).powi(2)).sum();
    let nb: f64 = wb.iter().map(|&w| (w as f64).powi(2)).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(ta, wa, tb, wb) / (na * nb).sqrt()
}

fn dot(ta: &[u32], wa: &[u64], tb: &[u32], wb: &[u64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < ta.len() && j < tb.len() {
        match ta[i].cmp(&tb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += wa[i] as f64 * wb[j] as f64;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityHistogram {
    /// Counts in `[m·0.05, (m+1)·0.05)`; the last bin includes 1.
    pub counts: Vec<u64>,
    pub pairs: u64,
    /// Whether every pair was evaluated (as opposed to a sample).
    pub exhaustive: bool,
}

impl SimilarityHistogram {
    fn empty(exhaustive: bool) -> Self {
        SimilarityHistogram { counts: vec![0; SIMILARITY_BINS], pairs: 0, exhaustive }
    }

    fn add(&mut self, sim: f64) {
        let m = ((sim / SIMILARITY_BIN_WIDTH).floor().max(0.0) as usize).min(SIMILARITY_BINS - 1);
        self.counts[m] += 1;
        self.pairs += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.pairs += other.pairs;
        self
    }

    /// Lower edge of the fullest bin (first one on ties).
    pub fn mode(&self) -> Option<f64> {
        if self.pairs == 0 {
            return None;
        }
        let (m, _) =
            self.counts.iter().enumerate().fold((0, 0), |best, (m, &c)| if c > best.1 { (m, c) } else { best });
        Some(m as f64 * SIMILARITY_BIN_WIDTH)
    }
}

/// Histogram of pairwise similarities over nodes with at least one link.
/// Every pair is used when there are at most [`EXACT_PAIR_LIMIT`] such nodes
/// (or the budget covers all pairs); otherwise `pair_budget` distinct pairs
/// are drawn uniformly with the given seed.
pub fn cosine_similarity_distribution(adj: &WeightedAdjacency, pair_budget: u64, seed: u64) -> SimilarityHistogram {
    assert!(pair_budget >= 1, "pair budget must be positive");
    let nodes: Vec<usize> = (0..adj.len()).filter(|&i| adj.degree(i) > 0).collect();
    let n = nodes.len() as u64;
    let total = n * n.saturating_sub(1) / 2;
    if nodes.len() <= EXACT_PAIR_LIMIT || pair_budget >= total {
        return nodes
            .par_iter()
            .enumerate()
            .fold(
                || SimilarityHistogram::empty(true),
                |mut h, (ia, &a)| {
                    for &b in &nodes[ia + 1..] {
                        h.add(cosine_similarity(adj, a, b));
                    }
                    h
                },
            )
            .reduce(|| SimilarityHistogram::empty(true), SimilarityHistogram::merge);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = HashSet::with_capacity(pair_budget as usize);
    let mut pairs = Vec::with_capacity(pair_budget as usize);
    while (pairs.len() as u64) < pair_budget {
        let a = rng.random_range(0..nodes.len());
        let b = rng.random_range(0..nodes.len());
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if chosen.insert(key) {
            pairs.push(key);
        }
    }
    pairs
        .par_chunks(8192)
        .map(|chunk| {
            let mut h = SimilarityHistogram::empty(false);
            for &(a, b) in chunk {
                h.add(cosine_similarity(adj, nodes[a], nodes[b]));
            }
            h
        })
        .reduce(|| SimilarityHistogram::empty(false), SimilarityHistogram::merge)
}
