//! Gauss-Hermite quadrature and the special functions the analysis needs.
//!
//! Everything here is implemented directly; no numerics crate is pulled in.
//! The normal CDF is built on a log-domain complementary error function so
//! that far tails keep full relative precision.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, SQRT_2};
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

pub const MAX_GH_ORDER: usize = 300;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const TINY: f64 = 1e-300;

/// Nodes and weights for `∫ f(x) exp(-x²) dx ≈ Σ w_i f(x_i)`.
///
/// Nodes are sorted ascending and exactly antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| w * f(a))
            .sum()
    }

    /// `E[f(G)]` for `G ~ N(mean, sd²)`.
    pub fn expect_normal(&self, mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate(|a| f(SQRT_2 * sd * a + mean)) / SQRT_PI
    }
}

/// Builds the `order`-point rule (1 ≤ order ≤ 100).
///
/// Golub-Welsch on the Jacobi matrix gives starting values; each node is then
/// polished by Newton steps on the orthonormal Hermite recurrence and its
/// weight recomputed from the Christoffel function, which keeps the tiny
/// outer weights accurate to full relative precision.
pub fn gauss_hermite(order: usize) -> Result<GaussHermiteRule> {
    if order == 0 || order > MAX_GH_ORDER {
        return Err(Error::invalid(
            "order",
            format!("Gauss-Hermite order must be in 1..={MAX_GH_ORDER}, got {order}"),
        ));
    }
    let n = order;
    let mut d = vec![0.0; n];
    let mut e: Vec<f64> = (1..=n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e[n - 1] = 0.0;
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut z)?;

    let mut nodes = d;
    nodes.sort_by(f64::total_cmp);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = orthonormal_hermite(n, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
    }
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes.iter().map(|&x| christoffel_weight(n, x)).collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let total: f64 = weights.iter().sum();
    if !((total - SQRT_PI).abs() <= 1e-12) {
        return Err(Error::Numerical(format!(
            "Gauss-Hermite weights of order {n} sum to {total}"
        )));
    }
    Ok(GaussHermiteRule {
        order: n,
        nodes,
        weights,
    })
}

/// Memoized [`gauss_hermite`]; rules are built once per order per process.
pub fn gauss_hermite_shared(order: usize) -> Result<Arc<GaussHermiteRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&order) {
        return Ok(r.clone());
    }
    let rule = Arc::new(gauss_hermite(order)?);
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .entry(order)
        .or_insert(rule.clone());
    Ok(rule)
}

/// `(p_n(x), p_n'(x))` for the Hermite polynomials orthonormal under `exp(-x²)`.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = PI.powf(-0.25);
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut beta_k = 0.0;
    for k in 0..n {
        let beta_next = ((k + 1) as f64 / 2.0).sqrt();
        let p_next = (x * p - beta_k * p_prev) / beta_next;
        let dp_next = (p + x * dp - beta_k * dp_prev) / beta_next;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        beta_k = beta_next;
    }
    (p, dp)
}

fn christoffel_weight(n: usize, x: f64) -> f64 {
    let mut p_prev = 0.0;
    let mut p = PI.powf(-0.25);
    let mut sum = p * p;
    let mut beta_k = 0.0;
    for k in 0..n - 1 {
        let beta_next = ((k + 1) as f64 / 2.0).sqrt();
        let p_next = (x * p - beta_k * p_prev) / beta_next;
        p_prev = p;
        p = p_next;
        sum += p * p;
        beta_k = beta_next;
    }
    1.0 / sum
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`, off-diagonal
/// `e[i]` coupling `i` and `i+1`). Only the first row of the eigenvector
/// matrix is accumulated, in `z`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical(
                    "tridiagonal eigen-solver did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Gamma family

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "ln_gamma",
            value: x,
            reason: "argument must be positive and finite",
        });
    }
    Ok(ln_gamma_unchecked(x))
}

pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "digamma",
            value: x,
            reason: "argument must be positive and finite",
        });
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0)))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "trigamma",
            value: x,
            reason: "argument must be positive and finite",
        });
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let tail = 1.0 / x
        + r / 2.0
        + r / x
            * (1.0 / 6.0
                - r * (1.0 / 30.0 - r * (1.0 / 42.0 - r * (1.0 / 30.0 - r * (5.0 / 66.0)))));
    Ok(acc + tail)
}

/// Series part of P(a, x): `P = exp(prefix) * sum`.
fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

/// Continued-fraction part of Q(a, x): `Q = exp(prefix) * h` (modified Lentz).
fn gamma_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 4.0 * f64::EPSILON {
            break;
        }
    }
    h
}

/// `(P(a, x), Q(a, x))` without argument checks; `a > 0`, `x ≥ 0`.
pub(crate) fn incomplete_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    let prefix = a * x.ln() - x - ln_gamma_unchecked(a);
    if x < a + 1.0 {
        let p = (prefix + gamma_series(a, x).ln()).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let q = (prefix + gamma_cf(a, x).ln()).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain {
            function: "regularized_lower_gamma",
            value: a,
            reason: "shape must be positive and finite",
        });
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain {
            function: "regularized_lower_gamma",
            value: x,
            reason: "argument must be non-negative",
        });
    }
    Ok(incomplete_gamma_pq(a, x).0)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, accurate when
/// small.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    regularized_lower_gamma(a, x)?;
    Ok(incomplete_gamma_pq(a, x).1)
}

// ---------------------------------------------------------------------------
// Error function and the normal distribution

/// `ln erfc(x)` for `x ≥ 0`.
fn ln_erfc_nonneg(x: f64) -> f64 {
    let y = x * x;
    if y < 1.5 {
        let erf = (0.5 * y.ln() - y - LN_SQRT_PI).exp() * gamma_series(0.5, y);
        if x == 0.0 {
            return 0.0;
        }
        (-erf).ln_1p()
    } else {
        -y + x.ln() - LN_SQRT_PI + gamma_cf(0.5, y).ln()
    }
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        ln_erfc_nonneg(x).exp()
    } else {
        2.0 - ln_erfc_nonneg(-x).exp()
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < 1.2 {
        let y = x * x;
        let v = (0.5 * y.ln() - y - LN_SQRT_PI).exp() * gamma_series(0.5, y);
        if x == 0.0 {
            0.0
        } else {
            v.copysign(x)
        }
    } else {
        (1.0 - erfc(x.abs())).copysign(x)
    }
}

/// `ln erfc(x)`, finite for every finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x >= 0.0 {
        ln_erfc_nonneg(x)
    } else {
        (2.0 - ln_erfc_nonneg(-x).exp()).ln()
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn ln_std_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x). Absolute error below 1e-15; relative accuracy is kept in the lower
/// tail down to the smallest normal double.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        0.5 * ln_erfc_nonneg(-x * FRAC_1_SQRT_2).exp()
    } else {
        1.0 - 0.5 * ln_erfc_nonneg(x * FRAC_1_SQRT_2).exp()
    }
}

/// `1 - Φ(x)`, accurate in the upper tail.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

/// `ln Φ(x)`, finite for every finite `x`.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        -LN_2 + ln_erfc_nonneg(-x * FRAC_1_SQRT_2)
    } else {
        (-0.5 * ln_erfc_nonneg(x * FRAC_1_SQRT_2).exp()).ln_1p()
    }
}

/// Abramowitz-Stegun rational start for the lower tail, `ln p ≤ ln 0.5`.
fn quantile_start(ln_p: f64) -> f64 {
    let t = (-2.0 * ln_p).sqrt();
    let num = 2.515_517 + t * (0.802_853 + t * 0.010_328);
    let den = 1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308));
    -(t - num / den)
}

/// Solves `ln Φ(x) = ln_p` for `ln_p ≤ ln 0.5` with Halley steps in the log
/// domain. Works for probabilities far below the double range.
fn lower_quantile_from_ln(ln_p: f64) -> f64 {
    let mut x = quantile_start(ln_p);
    for _ in 0..50 {
        let lc = ln_std_normal_cdf(x);
        let g = lc - ln_p;
        let gp = (ln_std_normal_pdf(x) - lc).exp();
        let step = g / gp / (1.0 + g * (x + gp) / (2.0 * gp));
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Φ⁻¹ evaluated from `ln p` (`ln p ≤ 0`).
pub fn std_normal_quantile_ln(ln_p: f64) -> f64 {
    if ln_p.is_nan() || ln_p > 0.0 {
        return f64::NAN;
    }
    if ln_p == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if ln_p <= -LN_2 {
        lower_quantile_from_ln(ln_p)
    } else {
        let q = -ln_p.exp_m1();
        if q == 0.0 {
            return f64::INFINITY;
        }
        -lower_quantile_from_ln(q.ln())
    }
}

/// Φ⁻¹(p); ±∞ at the endpoints, NaN outside [0, 1].
pub fn std_normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // 1 - p is exact here, so the upper half loses nothing.
        return -lower_quantile_from_ln((1.0 - p).ln());
    }
    lower_quantile_from_ln(p.ln())
}

/// The x with `1 - Φ(x) = q`, accurate for tiny `q`.
pub fn std_normal_upper_quantile(q: f64) -> f64 {
    -std_normal_quantile(q)
}
