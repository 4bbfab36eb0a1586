use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::Path;

use crate::fading::FadingModel;
use crate::quadrature::{gauss_hermite_shared, ln_std_normal_cdf, GaussHermiteRule, MAX_GH_ORDER};
use crate::{format_sig, Error, Result};

use super::{GaussianApprox, PowerLognormal};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Tabulation spans the approximation's mean ± this many standard deviations.
pub const TAB_HALF_WIDTH_SD: f64 = 8.0;

/// A tabulated CDF with linear interpolation between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub grid: Vec<f64>,
    pub probs: Vec<f64>,
}

impl CdfCurve {
    pub fn new(grid: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != probs.len() {
            return Err(Error::invalid("grid", "grid and probabilities must be non-empty and equal length"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "abscissas must be strictly increasing"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || probs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("probs", "must be nondecreasing values in [0, 1]"));
        }
        Ok(CdfCurve { grid, probs })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Linear interpolation; clamps to the end values outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return self.probs[0];
        }
        let last = g.len() - 1;
        if x >= g[last] {
            return self.probs[last];
        }
        let i = g.partition_point(|&v| v <= x) - 1;
        let t = (x - g[i]) / (g[i + 1] - g[i]);
        self.probs[i] + t * (self.probs[i + 1] - self.probs[i])
    }

    /// Smallest abscissa where the interpolated curve reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let ps = &self.probs;
        if p <= ps[0] {
            return self.grid[0];
        }
        let last = ps.len() - 1;
        if p > ps[last] {
            return self.grid[last];
        }
        let i = ps.partition_point(|&v| v < p);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let (p0, p1) = (ps[i - 1], ps[i]);
        if p1 == p0 {
            return x1;
        }
        x0 + (p - p0) / (p1 - p0) * (x1 - x0)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Largest jump between neighbouring grid points.
    pub fn max_increment(&self) -> f64 {
        self.probs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value_db,cdf\n");
        for (x, p) in self.grid.iter().zip(&self.probs) {
            let _ = writeln!(s, "{},{}", format_sig(*x), format_sig(*p));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Csv("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::Csv(format!("expected two columns, header is `{header}`")));
        }
        let mut grid = Vec::new();
        let mut probs = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut it = line.split(',');
            let parse = |v: Option<&str>| -> Result<f64> {
                v.ok_or_else(|| Error::Csv(format!("row {}: missing column", n + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("row {}: {e}", n + 2)))
            };
            grid.push(parse(it.next())?);
            probs.push(parse(it.next())?);
            if it.next().is_some() {
                return Err(Error::Csv(format!("row {}: too many columns", n + 2)));
            }
        }
        CdfCurve::new(grid, probs).map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Evaluates `f` on `n` evenly spaced points of `[center − 8 sd, center + 8 sd]`,
/// clamps to [0, 1] and removes rounding-level decreases.
pub fn tabulate(center: f64, sd: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<CdfCurve> {
    let half = TAB_HALF_WIDTH_SD * sd.max(1e-6);
    tabulate_range(center - half, center + half, n, f)
}

pub(crate) fn tabulate_range(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<CdfCurve> {
    if n < 2 {
        return Err(Error::invalid("grid_points", "need at least two grid points"));
    }
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let mut probs = Vec::with_capacity(n);
    let mut run: f64 = 0.0;
    for &x in &grid {
        let p = f(x);
        if !p.is_finite() {
            return Err(Error::Numerical(format!("CDF evaluation returned {p} at {x}")));
        }
        run = run.max(p.clamp(0.0, 1.0));
        probs.push(run);
    }
    CdfCurve::new(grid, probs)
}

/// The signal CDF: `(1/√π) Σ w_m F_H(x − (√2 σ a_m + μ))`.
#[derive(Debug, Clone)]
pub struct SignalCdf {
    fading: FadingModel,
    shifts: Vec<f64>,
    weights: Vec<f64>,
}

impl SignalCdf {
    pub fn new(g1: &GaussianApprox, fading: &FadingModel, rule: &GaussHermiteRule) -> Self {
        let sd = g1.sd();
        if sd == 0.0 {
            return SignalCdf {
                fading: *fading,
                shifts: vec![g1.mean],
                weights: vec![1.0],
            };
        }
        SignalCdf {
            fading: *fading,
            shifts: rule.nodes.iter().map(|a| SQRT_2 * sd * a + g1.mean).collect(),
            weights: rule.weights.iter().map(|w| w / SQRT_PI).collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s: f64 = self
            .shifts
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * self.fading.cdf_db(x - m))
            .sum();
        s.clamp(0.0, 1.0)
    }
}

/// Order of the outer (interference) rule used with an inner rule of order `m0`.
pub fn outer_order(m0: usize) -> usize {
    (6 * m0).clamp(1, MAX_GH_ORDER)
}

pub fn signal_cdf(g1: &GaussianApprox, fading: &FadingModel, rule: &GaussHermiteRule, x: f64) -> f64 {
    SignalCdf::new(g1, fading, rule).eval(x)
}

/// The SIR CDF `P(X1 − Q ≤ z) = E[F_X1(z + Q)]`.
///
/// `Q` is written as `μ_Q + σ_Q τ(N)` with `N` standard normal and
/// `τ(n) = Φ⁻¹(Φ(n)^{1/λ})`, so the outer expectation is a plain
/// Gauss-Hermite sum. For λ = 1 it reduces to the classical form
/// (see [`sir_cdf_literal`]); for the large λ that aggregates of hundreds of
/// cells produce, it avoids the sharply peaked `Φ^{λ−1}` weight that the
/// classical form needs many more nodes to resolve.
///
/// The outer sum runs on a rule of order [`outer_order`]`(M0)` rather than
/// `M0`: `σ_Q` is often several times the width of `F_X1`, and 30 nodes then
/// leave errors of order 1e−4 (narrow Nakagami fading). The inner sum stays
/// at `M0`.
#[derive(Debug, Clone)]
pub struct SirCdf {
    signal: SignalCdf,
    shifts: Vec<f64>,
    weights: Vec<f64>,
}

impl SirCdf {
    pub fn new(g1: &GaussianApprox, fading: &FadingModel, pl: &PowerLognormal, rule: &GaussHermiteRule) -> Self {
        let signal = SignalCdf::new(g1, fading, rule);
        if pl.sigma_q == 0.0 {
            return SirCdf {
                signal,
                shifts: vec![pl.mu_q],
                weights: vec![1.0],
            };
        }
        // Orders up to MAX_GH_ORDER always build, so this cannot fail in practice.
        let outer = gauss_hermite_shared(outer_order(rule.order)).expect("outer Gauss-Hermite rule");
        SirCdf {
            signal,
            shifts: outer
                .nodes
                .iter()
                .map(|a| pl.mu_q + pl.sigma_q * pl.score_map(SQRT_2 * a))
                .collect(),
            weights: outer.weights.iter().map(|w| w / SQRT_PI).collect(),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let s: f64 = self
            .shifts
            .iter()
            .zip(&self.weights)
            .map(|(q, w)| w * self.signal.eval(z + q))
            .sum();
        s.clamp(0.0, 1.0)
    }

    /// Same sum, with `F_X1` replaced by linear interpolation on a table of
    /// `n` points covering every `z + q` the sum touches. Used where
    /// thousands of curves share one grid.
    pub fn eval_many_tabulated(&self, zs: &[f64], n: usize) -> Vec<f64> {
        if zs.is_empty() {
            return Vec::new();
        }
        let n = n.max(2);
        let (zlo, zhi) = min_max(zs);
        let (qlo, qhi) = min_max(&self.shifts);
        let (lo, hi) = (zlo + qlo, zhi + qhi);
        if hi <= lo {
            return zs.iter().map(|&z| self.eval(z)).collect();
        }
        let h = (hi - lo) / (n - 1) as f64;
        let table: Vec<f64> = (0..n).map(|i| self.signal.eval(lo + i as f64 * h)).collect();
        let interp = |x: f64| {
            if x <= lo {
                return table[0];
            }
            let f = (x - lo) / h;
            let i = f as usize;
            if i >= n - 1 {
                return table[n - 1];
            }
            let t = f - i as f64;
            table[i] + t * (table[i + 1] - table[i])
        };
        zs.iter()
            .map(|&z| {
                let s: f64 = self
                    .shifts
                    .iter()
                    .zip(&self.weights)
                    .map(|(q, w)| w * interp(z + q))
                    .sum();
                s.clamp(0.0, 1.0)
            })
            .collect()
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

pub fn sir_cdf(
    g1: &GaussianApprox,
    fading: &FadingModel,
    pl: &PowerLognormal,
    rule: &GaussHermiteRule,
    z: f64,
) -> f64 {
    SirCdf::new(g1, fading, pl, rule).eval(z)
}

/// The classical double sum
/// `(λ/√π) Σ w_m Φ^{λ−1}(√2 a_m) F_X1(z + √2 σ_Q a_m + μ_Q)`,
/// kept for cross-checks. Converges slowly in the rule order when λ is large.
pub fn sir_cdf_literal(
    g1: &GaussianApprox,
    fading: &FadingModel,
    pl: &PowerLognormal,
    rule: &GaussHermiteRule,
    z: f64,
) -> f64 {
    let signal = SignalCdf::new(g1, fading, rule);
    let s: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(a, w)| {
            let n = SQRT_2 * a;
            let k = ((pl.lambda - 1.0) * ln_std_normal_cdf(n)).exp();
            w * k * signal.eval(z + pl.sigma_q * n + pl.mu_q)
        })
        .sum();
    (pl.lambda * s / SQRT_PI).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_hermite;

    #[test]
    fn curve_interpolation_and_quantiles() {
        let c = CdfCurve::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(c.eval(-1.0), 0.0);
        assert_eq!(c.eval(0.5), 0.25);
        assert_eq!(c.eval(5.0), 1.0);
        assert_eq!(c.median(), 1.0);
        assert_eq!(c.quantile(0.75), 1.5);
        assert!(CdfCurve::new(vec![0.0, 1.0], vec![0.6, 0.5]).is_err());
        assert!(CdfCurve::new(vec![1.0, 1.0], vec![0.1, 0.5]).is_err());
        let back = CdfCurve::from_csv(&c.to_csv()).unwrap();
        assert_eq!(back, c);
        assert!(CdfCurve::from_csv("a,b\n1,x\n").is_err());
    }

    #[test]
    fn degenerate_signal_is_fading_cdf() {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: 0.0, var: 0.0 };
        let v = signal_cdf(&g, &FadingModel::Rayleigh, &rule, 0.0);
        assert!((v - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn degenerate_interference_shifts_signal() {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: -93.0, var: 6.0 };
        let pl = PowerLognormal::new(1.0, -137.0, 1e-9).unwrap();
        for z in [30.0, 40.0, 44.0, 50.0] {
            let a = sir_cdf(&g, &FadingModel::Rayleigh, &pl, &rule, z);
            let b = signal_cdf(&g, &FadingModel::Rayleigh, &rule, z - 137.0);
            assert!((a - b).abs() < 1e-6);
            let c = sir_cdf_literal(&g, &FadingModel::Rayleigh, &pl, &rule, z);
            assert!((c - b).abs() < 1e-6);
        }
    }

    #[test]
    fn normal_score_form_equals_classical_at_lambda_one() {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: -93.0, var: 6.0 };
        let pl = PowerLognormal::new(1.0, -137.0, 3.0).unwrap();
        for z in [35.0, 44.0, 52.0] {
            let a = sir_cdf(&g, &FadingModel::Rayleigh, &pl, &rule, z);
            // Same outer nodes; the inner sums differ only in their order.
            let wide = gauss_hermite(outer_order(30)).unwrap();
            let b = sir_cdf_literal(&g, &FadingModel::Rayleigh, &pl, &wide, z);
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn large_lambda_agrees_with_high_order_classical_sum() {
        let g = GaussianApprox { mean: -93.0, var: 6.0 };
        let pl = PowerLognormal::new(227.0, -137.4, 14.6).unwrap();
        let fast = gauss_hermite(30).unwrap();
        let slow = gauss_hermite(100).unwrap();
        for z in [10.0, 20.0, 30.0, 40.0] {
            let a = sir_cdf(&g, &FadingModel::Rayleigh, &pl, &fast, z);
            let b = sir_cdf_literal(&g, &FadingModel::Rayleigh, &pl, &slow, z);
            assert!((a - b).abs() < 2e-4, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn tabulated_sir_matches_direct() {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: -93.0, var: 6.0 };
        let pl = PowerLognormal::new(227.0, -137.4, 14.6).unwrap();
        let s = SirCdf::new(&g, &FadingModel::Rayleigh, &pl, &rule);
        let zs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let tab = s.eval_many_tabulated(&zs, 8001);
        for (z, t) in zs.iter().zip(tab) {
            assert!((s.eval(*z) - t).abs() < 1e-5);
        }
    }
}
