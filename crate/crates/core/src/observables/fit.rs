//! Least-squares power-law fits in log–log space.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_FIT_POINTS: usize = 5;

/// Inclusive x-range used for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub const ALL: Window = Window { lo: 0.0, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Window { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Slope of log y against log x.
    pub exponent: f64,
    /// `y ≈ prefactor · x^exponent`.
    pub prefactor: f64,
    pub stderr: f64,
    /// Smallest and largest x actually used.
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
}

/// Ordinary least squares on `(ln x, ln y)` for points inside `window`
/// with positive coordinates.
pub fn fit_power_law(points: &[(f64, f64)], window: Window) -> Result<FitResult> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0 && window.contains(x))
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = used.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} positive points in [{}, {}], got {n}",
            window.lo, window.hi
        )));
    }
    let nf = n as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = used.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let (x_lo, x_hi) = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0 && window.contains(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    Ok(FitResult { exponent: slope, prefactor: intercept.exp(), stderr, x_lo, x_hi, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = log_grid(20, 1.0, 1e4).into_iter().map(|x| (x, x.powf(-2.0))).collect();
        let f = fit_power_law(&pts, Window::ALL).unwrap();
        assert!((f.exponent + 2.0).abs() < 1e-6);
        assert!((f.exponent + 2.0).abs() / 2.0 < 1e-6);
        assert!((f.prefactor - 1.0).abs() < 1e-9);
        assert!(f.stderr < 1e-9);
        assert_eq!(f.points, 20);
    }

    #[test]
    fn constant_has_zero_slope() {
        let pts: Vec<(f64, f64)> = log_grid(10, 1.0, 100.0).into_iter().map(|x| (x, 7.0)).collect();
        let f = fit_power_law(&pts, Window::ALL).unwrap();
        assert!(f.exponent.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(f64, f64)> = log_grid(40, 1.0, 1e5)
            .into_iter()
            .map(|x| (x, x.powf(0.7) * (1.0 + rng.random_range(-0.01..0.01))))
            .collect();
        let f = fit_power_law(&pts, Window::ALL).unwrap();
        assert!((f.exponent - 0.7).abs() < 0.02, "{f:?}");
        // 3 sigma of the residual-based error still covers the truth
        assert!((f.exponent - 0.7).abs() < 3.0 * f.stderr + 1e-4);
    }

    #[test]
    fn window_restricts_points() {
        let pts: Vec<(f64, f64)> = (1..=100).map(|x| (x as f64, if x <= 10 { 1.0 } else { x as f64 })).collect();
        let f = fit_power_law(&pts, Window::new(11.0, 100.0)).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12);
        assert_eq!((f.x_lo, f.x_hi), (11.0, 100.0));
    }

    #[test]
    fn too_few_points() {
        let pts = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 0.0)];
        assert!(matches!(fit_power_law(&pts, Window::ALL), Err(Error::Fit(_))));
    }
}
