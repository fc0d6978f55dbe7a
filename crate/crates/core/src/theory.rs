//! Expected vocabulary size for ensembles of independent walks.
//!
//! For visit probabilities `p_i` the expected number of distinct nodes after
//! `n` walks is `Σ_i 1 - (1 - p_i)^n`. Under the ring approximation every
//! node of ring `l` has `p_i = 1/N_l` for walks reaching that ring, which
//! gives closed sums over ring populations for fixed and random lengths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::substrate::{RingProfile, SubstrateGraph};
use crate::walker::{run_walk, walk_rng, LengthSpec};
use crate::{Error, NodeId, Result};

/// Single-walk visit probability per node, with binomial standard errors
/// when estimated by sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitProbabilities {
    pub probs: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Walks used for the estimate; 0 for exact probabilities.
    pub samples: u64,
}

impl VisitProbabilities {
    pub fn exact(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param(format!("probability {p} outside [0, 1]")));
        }
        let n = probs.len();
        Ok(VisitProbabilities { probs, std_errors: vec![0.0; n], samples: 0 })
    }
}

/// `N_l (1 - (1 - 1/N_l)^m)` evaluated without cancellation; `N_l = ∞`
/// yields the limit `m`.
#[inline]
fn ring_term(n_l: f64, m: f64) -> f64 {
    if m <= 0.0 || n_l <= 0.0 {
        return 0.0;
    }
    if n_l <= 1.0 {
        return n_l;
    }
    if !n_l.is_finite() {
        return m;
    }
    if !m.is_finite() {
        return n_l;
    }
    -n_l * (m * (-1.0 / n_l).ln_1p()).exp_m1()
}

/// `1 - (1 - p)^n`.
#[inline]
fn visited(p: f64, n: f64) -> f64 {
    if n <= 0.0 || p <= 0.0 {
        0.0
    } else if p >= 1.0 || !n.is_finite() {
        1.0
    } else {
        -(n * (-p).ln_1p()).exp_m1()
    }
}

/// Expected distinct visited nodes after `n_rw` independent walks.
pub fn n_distinct_exact(p: &VisitProbabilities, n_rw: f64) -> f64 {
    p.probs.iter().map(|&pi| visited(pi, n_rw)).sum()
}

/// Delta-method standard error of [`n_distinct_exact`] from the sampling
/// error of estimated probabilities.
pub fn n_distinct_exact_stderr(p: &VisitProbabilities, n_rw: f64) -> f64 {
    p.probs
        .iter()
        .zip(&p.std_errors)
        .map(|(&pi, &se)| {
            let d = if pi >= 1.0 { 0.0 } else { n_rw * (1.0 - pi).powf(n_rw - 1.0) };
            (d * se).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Ring population model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RingModel {
    /// `N_l = max(1, round(c_n · l^a))`.
    PowerLawRings {
        a: f64,
        #[serde(default = "default_prefactor")]
        c_n: f64,
    },
    /// `N_l = z^l`.
    ExponentialRings { z: f64 },
    /// Measured ring sizes; rings beyond the profile are empty.
    Empirical { profile: RingProfile },
}

fn default_prefactor() -> f64 {
    1.0
}

impl RingModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            RingModel::PowerLawRings { a, c_n } if !(*a > 0.0 && *c_n > 0.0) => {
                Err(Error::param(format!("power-law rings need a > 0 and c_n > 0 (a={a}, c_n={c_n})")))
            }
            RingModel::ExponentialRings { z } if !(*z >= 1.0) => {
                Err(Error::param(format!("exponential rings need z >= 1 (z={z})")))
            }
            RingModel::Empirical { profile } if profile.sizes.first() != Some(&1) => {
                Err(Error::param("empirical ring profile must start with N_0 = 1"))
            }
            _ => Ok(()),
        }
    }

    /// `N_l`, or `None` past the end of an empirical profile.
    pub fn size(&self, l: usize) -> Option<f64> {
        match self {
            RingModel::PowerLawRings { a, c_n } => Some((c_n * (l as f64).powf(*a)).round().max(1.0)),
            RingModel::ExponentialRings { z } => Some(z.powi(l.min(i32::MAX as usize) as i32)),
            RingModel::Empirical { profile } => profile.sizes.get(l).map(|&n| n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingModelSpec {
    pub rings: RingModel,
    pub lengths: LengthSpec,
}

/// Fixed-length prediction over explicit ring sizes `N_0..=N_{l_max}`.
pub fn n_distinct_fixed_length(rings: &[f64], l_max: usize, n_rw: f64) -> Result<f64> {
    if l_max >= rings.len() {
        return Err(Error::param(format!("l_max={l_max} beyond the {} available rings", rings.len())));
    }
    Ok(rings[..=l_max].iter().map(|&n_l| ring_term(n_l, n_rw)).sum())
}

/// Convenience form of [`n_distinct_fixed_length`] for a measured profile.
pub fn n_distinct_fixed_length_profile(profile: &RingProfile, l_max: usize, n_rw: f64) -> Result<f64> {
    let sizes: Vec<f64> = profile.sizes.iter().map(|&n| n as f64).collect();
    n_distinct_fixed_length(&sizes, l_max, n_rw)
}

/// Truncation controls for the random-length series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesOptions {
    /// Stop once a ring term drops below this value.
    pub threshold: f64,
    /// Largest ring index that may be evaluated.
    pub cap: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { threshold: 1e-12, cap: 100_000 }
    }
}

/// Precomputed random-length series: ring sizes and tail probabilities
/// `P_>(l)`, reusable across many `n_rw`.
#[derive(Debug, Clone)]
pub struct RandomLengthSeries {
    sizes: Vec<f64>,
    tail: Vec<f64>,
    options: SeriesOptions,
    /// Support extends past the cap, so the sum may not have converged there.
    open_ended: bool,
}

impl RandomLengthSeries {
    pub fn new(spec: &RingModelSpec, options: SeriesOptions) -> Result<Self> {
        spec.rings.validate()?;
        spec.lengths.validate()?;
        let mut tail = spec.lengths.tail_probabilities();
        let open_ended = tail.len() > options.cap + 1;
        tail.truncate(options.cap + 1);
        let mut sizes = Vec::with_capacity(tail.len());
        for l in 0..tail.len() {
            match spec.rings.size(l) {
                Some(n) if n >= 1.0 => sizes.push(n),
                _ => break,
            }
        }
        tail.truncate(sizes.len());
        Ok(RandomLengthSeries { sizes, tail, options, open_ended })
    }

    pub fn evaluate(&self, n_rw: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut last = f64::INFINITY;
        for (l, (&n_l, &p_gt)) in self.sizes.iter().zip(&self.tail).enumerate() {
            let m = n_rw * p_gt;
            if m <= 0.0 {
                return Ok(total);
            }
            let term = ring_term(n_l, m);
            total += term;
            last = term;
            if l > 0 && term < self.options.threshold {
                return Ok(total);
            }
        }
        if self.open_ended && last >= self.options.threshold {
            return Err(Error::Evaluation(format!(
                "series not converged at cap l={} (last term {last:e})",
                self.options.cap
            )));
        }
        Ok(total)
    }
}

/// Random-length prediction `Σ_l N_l (1 - (1 - 1/N_l)^{n P_>(l)})`.
pub fn n_distinct_random_length(spec: &RingModelSpec, n_rw: f64) -> Result<f64> {
    RandomLengthSeries::new(spec, SeriesOptions::default())?.evaluate(n_rw)
}

/// Growth exponent `(a + 1)/(a + b - 1)` for `N_l ~ l^a` and `P(l) ~ l^-b`.
pub fn asymptotic_exponent(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 1.0) {
        return Err(Error::param(format!("need a > 0 and b > 1 (a={a}, b={b})")));
    }
    Ok((a + 1.0) / (a + b - 1.0))
}

/// Shape `n / (ln n)^(b-1)` of the exponential-ring regime, up to a constant.
pub fn asymptotic_log_corrected(b: f64, n_rw: f64) -> Result<f64> {
    if n_rw < 3.0 || b < 1.0 {
        return Err(Error::param(format!("need n_rw >= 3 and b >= 1 (n_rw={n_rw}, b={b})")));
    }
    Ok(n_rw / n_rw.ln().powf(b - 1.0))
}

/// Monte Carlo estimate of single-walk visit probabilities from
/// `n_samples` independent walks (stream `i` of `seed` for sample `i`).
pub fn estimate_visit_probs(
    graph: &SubstrateGraph,
    origin: NodeId,
    lengths: &LengthSpec,
    n_samples: u64,
    seed: u64,
    count_origin: bool,
) -> Result<VisitProbabilities> {
    if n_samples == 0 {
        return Err(Error::param("n_samples must be >= 1"));
    }
    if origin as usize >= graph.node_count() {
        return Err(Error::param(format!("origin {origin} out of range")));
    }
    let sampler = lengths.sampler()?;
    let n = graph.node_count();
    const CHUNK: u64 = 16_384;
    let chunks = n_samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; n];
            let mut stamp = vec![u64::MAX; n];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                let mut rng = walk_rng(seed, i);
                let steps = sampler.sample(&mut rng);
                let t = run_walk(graph, origin, steps, &mut rng);
                for &v in &t.nodes {
                    if stamp[v as usize] != i {
                        stamp[v as usize] = i;
                        counts[v as usize] += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let ns = n_samples as f64;
    let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 / ns).collect();
    if !count_origin {
        probs[origin as usize] = 0.0;
    }
    let std_errors = probs.iter().map(|&p| (p * (1.0 - p) / ns).sqrt()).collect();
    Ok(VisitProbabilities { probs, std_errors, samples: n_samples })
}

/// `n_rw` values spaced `per_decade` per decade over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, per_decade: u32) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=steps).map(|i| lo * 10f64.powf(decades * i as f64 / steps as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{fit_power_law, Window};

    fn power_rings(a: f64, b: f64, l_max: usize) -> RingModelSpec {
        RingModelSpec {
            rings: RingModel::PowerLawRings { a, c_n: 1.0 },
            lengths: LengthSpec::PowerLaw { b, l_min: 1, l_max },
        }
    }

    #[test]
    fn exact_sum_small_cases() {
        let p = VisitProbabilities::exact(vec![1.0, 0.5]).unwrap();
        assert!((n_distinct_exact(&p, 1.0) - 1.5).abs() < 1e-15);
        assert!((n_distinct_exact(&p, 1e6) - 2.0).abs() < 1e-15);
        assert_eq!(n_distinct_exact(&p, f64::INFINITY), 2.0);
        let z = VisitProbabilities::exact(vec![0.0, 0.0, 1.0]).unwrap();
        for n in [1.0, 10.0, 1e9] {
            assert_eq!(n_distinct_exact(&z, n), 1.0);
        }
        assert!(VisitProbabilities::exact(vec![1.5]).is_err());
    }

    #[test]
    fn fixed_length_cases() {
        assert_eq!(n_distinct_fixed_length(&[1.0], 0, 5.0).unwrap(), 1.0);
        for z in [2.0, 3.0, 17.0] {
            assert!((n_distinct_fixed_length(&[1.0, z], 1, 1.0).unwrap() - 2.0).abs() < 1e-12);
        }
        let rings = [1.0, 3.0, 6.0, 12.0];
        assert!((n_distinct_fixed_length(&rings, 3, 1e12).unwrap() - 22.0).abs() < 1e-9);
        assert!(n_distinct_fixed_length(&rings, 4, 10.0).is_err());
    }

    #[test]
    fn fixed_length_monotone_and_bounded() {
        let rings = [1.0, 8.0, 40.0, 150.0];
        let mut prev = 0.0;
        for n in log_grid(1.0, 1e8, 5) {
            let v = n_distinct_fixed_length(&rings, 3, n).unwrap();
            assert!(v >= prev - 1e-12 && v <= 199.0 + 1e-9);
            prev = v;
        }
    }

    #[test]
    fn point_mass_lengths_reduce_to_fixed() {
        let spec =
            RingModelSpec { rings: RingModel::PowerLawRings { a: 2.0, c_n: 1.0 }, lengths: LengthSpec::Fixed { l: 6 } };
        let rings: Vec<f64> = (0..=6).map(|l| spec.rings.size(l).unwrap()).collect();
        for n in [1.0, 7.0, 300.0, 1e5] {
            let a = n_distinct_random_length(&spec, n).unwrap();
            let b = n_distinct_fixed_length(&rings, 6, n).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn power_law_ring_slopes() {
        for (a, want) in [(1.0, 2.0 / 3.0), (2.0, 0.75)] {
            let series = RandomLengthSeries::new(&power_rings(a, 3.0, 100_000), SeriesOptions::default()).unwrap();
            let pts: Vec<(f64, f64)> =
                log_grid(1e2, 1e7, 10).into_iter().map(|n| (n, series.evaluate(n).unwrap())).collect();
            let f = fit_power_law(&pts, Window::ALL).unwrap();
            assert!((f.exponent - want).abs() < 0.05, "a={a}: slope {}", f.exponent);
        }
    }

    #[test]
    fn asymptotics() {
        assert!((asymptotic_exponent(1.0, 3.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((asymptotic_exponent(2.0, 3.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(asymptotic_exponent(2.0, 2.0).unwrap(), 1.0);
        assert!(asymptotic_exponent(0.0, 3.0).is_err());
        assert_eq!(asymptotic_log_corrected(1.0, 1234.0).unwrap(), 1234.0);
        let e2 = 2f64.exp();
        assert!((asymptotic_log_corrected(3.0, e2).unwrap() - e2 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn open_ended_series_reports_divergence() {
        // support beyond a tiny cap with terms still large
        let spec = power_rings(1.0, 1.5, 1000);
        let series = RandomLengthSeries::new(&spec, SeriesOptions { threshold: 1e-12, cap: 10 }).unwrap();
        assert!(matches!(series.evaluate(1e6), Err(Error::Evaluation(_))));
        // the same spec converges when the cap covers the support
        assert!(n_distinct_random_length(&spec, 1e6).is_ok());
    }

    #[test]
    fn empirical_profile_series() {
        let spec = RingModelSpec {
            rings: RingModel::Empirical { profile: RingProfile { origin: 0, sizes: vec![1, 3, 6, 12] } },
            lengths: LengthSpec::PowerLaw { b: 3.0, l_min: 1, l_max: 1000 },
        };
        let v = n_distinct_random_length(&spec, 1e12).unwrap();
        assert!((v - 22.0).abs() < 1e-6);
    }

    #[test]
    fn visit_probs_on_complete_graph() {
        let g = SubstrateGraph::from_edges(5, (0..5u32).flat_map(|a| (a + 1..5).map(move |b| (a, b)))).unwrap();
        let p = estimate_visit_probs(&g, 0, &LengthSpec::Fixed { l: 1 }, 200_000, 3, true).unwrap();
        assert_eq!(p.probs[0], 1.0);
        for i in 1..5 {
            assert!((p.probs[i] - 0.25).abs() < 4.0 * p.std_errors[i], "{}", p.probs[i]);
        }
        let p2 = estimate_visit_probs(&g, 0, &LengthSpec::Fixed { l: 1 }, 200_000, 3, true).unwrap();
        assert_eq!(p, p2);
    }
}
