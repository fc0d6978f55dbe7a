//! Logarithmic binning.

use serde::{Deserialize, Serialize};

/// Degree classes or bins with fewer samples than this are flagged.
pub const LOW_SAMPLE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    pub x: f64,
    pub y: f64,
    pub count: u64,
    pub low_sample: bool,
}

/// `(x, mean y, samples)` per group; empty groups are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub points: Vec<BinnedPoint>,
}

impl BinnedSeries {
    pub fn from_groups(groups: impl IntoIterator<Item = (f64, f64, u64)>) -> Self {
        let points = groups
            .into_iter()
            .filter(|&(_, _, c)| c > 0)
            .map(|(x, y, count)| BinnedPoint { x, y, count, low_sample: count < LOW_SAMPLE })
            .collect();
        BinnedSeries { points }
    }

    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, x: f64) -> Option<&BinnedPoint> {
        self.points.iter().find(|p| p.x == x)
    }
}

/// Geometric bins `[x_min·r^m, x_min·r^(m+1))`; the last bin is closed so
/// that a maximum lying exactly on an edge stays in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBins {
    pub x_min: f64,
    pub ratio: f64,
    pub count: usize,
}

impl LogBins {
    pub fn new(x_min: f64, x_max: f64, ratio: f64) -> Self {
        assert!(x_min > 0.0 && x_max >= x_min && ratio > 1.0, "invalid log bins");
        let span = (x_max / x_min).ln() / ratio.ln();
        let count = ((span - 1e-9).ceil() as usize).max(1);
        LogBins { x_min, ratio, count }
    }

    pub fn index(&self, x: f64) -> usize {
        let m = ((x / self.x_min).ln() / self.ratio.ln() + 1e-9).floor();
        (m.max(0.0) as usize).min(self.count - 1)
    }

    pub fn edges(&self, m: usize) -> (f64, f64) {
        let lo = self.x_min * self.ratio.powi(m as i32);
        (lo, lo * self.ratio)
    }

    pub fn center(&self, m: usize) -> f64 {
        let (lo, hi) = self.edges(m);
        (lo * hi).sqrt()
    }
}

/// Averages `y` within geometric bins of `x` (all `x` must be positive);
/// each bin is reported at its geometric centre.
pub fn log_bin(points: &[(f64, f64)], ratio: f64) -> BinnedSeries {
    let Some(bins) = bins_for(points.iter().map(|p| p.0), ratio) else {
        return BinnedSeries::default();
    };
    let mut sum = vec![0.0; bins.count];
    let mut cnt = vec![0u64; bins.count];
    for &(x, y) in points {
        let m = bins.index(x);
        sum[m] += y;
        cnt[m] += 1;
    }
    BinnedSeries::from_groups((0..bins.count).map(|m| {
        let c = cnt[m];
        (bins.center(m), if c > 0 { sum[m] / c as f64 } else { 0.0 }, c)
    }))
}

pub(crate) fn bins_for(xs: impl Iterator<Item = f64>, ratio: f64) -> Option<LogBins> {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        assert!(x > 0.0, "log binning needs positive x (got {x})");
        (lo.min(x), hi.max(x))
    });
    lo.is_finite().then(|| LogBins::new(lo, hi, ratio))
}

/// Keeps the first point at or beyond each log-spaced target
/// (`per_decade` targets per decade, starting at the first point's x).
/// Input must be sorted by increasing positive x.
pub fn thin_log_spaced(points: &[(f64, f64)], per_decade: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let Some(&(x0, _)) = points.first() else {
        return out;
    };
    let step = 10f64.powf(1.0 / per_decade as f64);
    let mut next = x0;
    for &(x, y) in points {
        if x >= next * (1.0 - 1e-12) {
            out.push((x, y));
            while next <= x * (1.0 + 1e-12) {
                next *= step;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two_edges() {
        let pts: Vec<(f64, f64)> = (1..=8).map(|x| (x as f64, x as f64)).collect();
        let s = log_bin(&pts, 2.0);
        assert_eq!(s.len(), 3);
        // [1,2) -> {1}, [2,4) -> {2,3}, [4,8] -> {4..8}
        assert_eq!(s.points.iter().map(|p| p.count).collect::<Vec<_>>(), vec![1, 2, 5]);
        assert_eq!(s.points[1].y, 2.5);
        assert_eq!(s.points[2].y, 6.0);
        assert!((s.points[0].x - 2f64.sqrt()).abs() < 1e-12);
        assert!(s.points[0].low_sample && !s.points[2].low_sample);
    }

    #[test]
    fn single_point_single_bin() {
        let s = log_bin(&[(3.0, 7.0)], 2.0);
        assert_eq!(s.len(), 1);
        assert_eq!((s.points[0].y, s.points[0].count), (7.0, 1));
    }

    #[test]
    fn constant_y_survives_binning() {
        let pts: Vec<(f64, f64)> = (1..500).map(|x| (x as f64 * 1.7, 4.25)).collect();
        assert!(log_bin(&pts, 2.0).points.iter().all(|p| p.y == 4.25));
    }

    #[test]
    fn empty_input() {
        assert!(log_bin(&[], 2.0).is_empty());
        assert!(thin_log_spaced(&[], 10).is_empty());
    }

    #[test]
    fn thinning_keeps_log_spacing() {
        let pts: Vec<(f64, f64)> = (1..=10_000).map(|x| (x as f64, 0.0)).collect();
        let t = thin_log_spaced(&pts, 10);
        assert_eq!(t.first().unwrap().0, 1.0);
        assert!(t.len() >= 35 && t.len() <= 41, "{}", t.len());
        assert!(t.iter().any(|p| p.0 == 10_000.0 || p.0 >= 7_900.0));
    }
}
