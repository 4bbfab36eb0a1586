//! Analytic quantities against independent Monte Carlo or quadrature oracles.

use std::time::Instant;

use dnaga::analysis::{
    analyze_cell, fit_power_lognormal_with, interference_path_moments, FitMethod, GaussianApprox, PowerLognormal,
    AnalysisOptions, SignalCdf, SirCdf,
};
use dnaga::channel::ChannelParams;
use dnaga::fading::FadingModel;
use dnaga::quadrature::gauss_hermite;
use dnaga::rng::stream;
use dnaga::scenario::{generate_hex_lattice, CellTemplate, UeDistribution};
use dnaga::simulator::{simulate, simulate_single_interferer, SimConfig, Victim};
use dnaga::ZETA;
use rand_distr::{Distribution, StandardNormal};

fn mean_var(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    // SE of the sample variance from the fourth central moment.
    (m, v, ((m4 - v * v) / n).sqrt())
}

#[test]
fn fading_db_moments_match_ten_million_draws() {
    for (i, f) in [FadingModel::Rayleigh, FadingModel::Nakagami { k: 10.0, theta: 0.1 }].iter().enumerate() {
        let mut rng = stream(2024, &[i as u64]);
        let xs: Vec<f64> = (0..10_000_000).map(|_| f.sample_db(&mut rng)).collect();
        let (m, v, se_v) = mean_var(&xs);
        let (em, ev) = f.moments_db();
        let se_m = (v / xs.len() as f64).sqrt();
        assert!((m - em).abs() < 3.0 * se_m, "{f:?} mean {m} vs {em} (se {se_m})");
        assert!((v - ev).abs() < 3.0 * se_v, "{f:?} var {v} vs {ev} (se {se_v})");
    }
}

#[test]
fn shadow_variances_match_sampling() {
    let n = 1_000_000;
    for eta in [0.5, 0.8, 1.0] {
        let p = ChannelParams { eta, ..Default::default() };
        let s = p.sigma_shadow_db;
        let mut rng = stream(77, &[(eta * 10.0) as u64]);
        let mut draw = || -> f64 { s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng) };
        let interf: Vec<f64> = (0..n).map(|_| eta * draw() - draw()).collect();
        let signal: Vec<f64> = (0..n).map(|_| (eta - 1.0) * draw()).collect();
        for (xs, (em, ev)) in [(interf, p.interference_shadow_moments()), (signal, p.signal_shadow_moments())] {
            let (m, v, _) = mean_var(&xs);
            let se_v = ev * (2.0 / (n as f64 - 1.0)).sqrt();
            assert!((m - em).abs() < 3.0 * (ev / n as f64).sqrt() + 1e-12);
            assert!((v - ev).abs() < 3.0 * se_v + 1e-12, "eta {eta}: {v} vs {ev}");
        }
    }
}

#[test]
fn pre_fading_interference_matches_path_moments() {
    let dep = generate_hex_lattice(55.43, 7, &CellTemplate::default()).unwrap();
    let p = ChannelParams::default();
    let path = interference_path_moments(&dep, 0, 3, &p, 400_000, 5).unwrap();
    let xs = simulate_single_interferer(&dep, 0, 3, &p, &FadingModel::Rayleigh, false, 400_000, 6).unwrap();
    let (m, v, se_v) = mean_var(&xs);
    let want_m = p.p0_dbm + path.mu_l;
    let want_v = path.var_l + p.interference_shadow_moments().1;
    let se_m = (v / xs.len() as f64).sqrt().hypot(path.std_error);
    assert!((m - want_m).abs() < 3.0 * se_m, "{m} vs {want_m}");
    assert!((v - want_v).abs() < 3.0 * se_v + 3.0 * path.var_l * (2.0 / 400_000f64).sqrt(), "{v} vs {want_v}");
}

/// Tabulated pipeline curves for both hex cases at M0 = 30 and 60.
#[test]
fn doubling_gh_order_changes_tabulated_curves_by_less_than_1e6() {
    let cases = [
        (CellTemplate::default(), FadingModel::Rayleigh),
        (
            CellTemplate { ue_distribution: UeDistribution::InverseRadial, ..Default::default() },
            FadingModel::Nakagami { k: 10.0, theta: 0.1 },
        ),
    ];
    for (template, f) in cases {
        let dep = generate_hex_lattice(55.43, 228, &template).unwrap();
        let run = |gh_order| {
            let o = AnalysisOptions { gh_order, n_samples: 20_000, ..Default::default() };
            analyze_cell(&dep, 0, &ChannelParams::default(), &f, &o).unwrap()
        };
        let (a, b) = (run(30), run(60));
        for (name, c30, c60) in [("signal", &a.signal, &b.signal), ("sir", &a.sir, &b.sir)] {
            assert_eq!(c30.grid, c60.grid);
            let worst = c30.probs.iter().zip(&c60.probs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-6, "{f:?} {name}: {worst}");
        }
    }
}

/// Interior-λ fits, where σ_Q is several times the width of `F_X1`.
#[test]
fn doubling_gh_order_converges_for_interior_lambda() {
    let g = GaussianApprox { mean: -93.07, var: 5.97 };
    let pl = PowerLognormal::new(202.66, -137.71, 212.04f64.sqrt()).unwrap();
    let single = PowerLognormal::new(1.0, -120.0, 14.0).unwrap();
    let (r30, r60) = (gauss_hermite(30).unwrap(), gauss_hermite(60).unwrap());
    for f in [FadingModel::Rayleigh, FadingModel::Nakagami { k: 10.0, theta: 0.1 }] {
        let (s30, s60) = (SignalCdf::new(&g, &f, &r30), SignalCdf::new(&g, &f, &r60));
        for i in 0..=400 {
            let x = -130.0 + 0.1 * i as f64;
            assert!((s30.eval(x) - s60.eval(x)).abs() < 1e-6, "signal at {x}");
        }
        for (p, lo) in [(&pl, -20.0), (&single, -10.0)] {
            let (z30, z60) = (SirCdf::new(&g, &f, p, &r30), SirCdf::new(&g, &f, p, &r60));
            for i in 0..=400 {
                let z = lo + 0.15 * i as f64;
                assert!((z30.eval(z) - z60.eval(z)).abs() < 1e-6, "{f:?} λ {} SIR at {z}", p.lambda);
            }
        }
    }
}

/// `E[exp(−s Σ 10^{Q_b/10})]` for independent Gaussian `Q_b`, by a dense
/// trapezoid rule over ±15 SD per cell. (Gauss-Hermite, even at order 100,
/// is only good to about 1e−6 on this double-exponential integrand.)
fn target_transform(cells: &[GaussianApprox], s: f64) -> f64 {
    cells
        .iter()
        .map(|c| {
            let (lo, hi) = (c.mean - 15.0 * c.sd(), c.mean + 15.0 * c.sd());
            let n = 100_000;
            let h = (hi - lo) / n as f64;
            let norm = (2.0 * std::f64::consts::PI * c.var).sqrt();
            (0..=n)
                .map(|i| {
                    let q = lo + i as f64 * h;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * (-(q - c.mean).powi(2) / (2.0 * c.var)).exp() / norm * (-s * (q / ZETA).exp()).exp()
                })
                .sum::<f64>()
                * h
        })
        .product()
}

/// Same transform for the fitted law, by direct integration of its density.
fn fitted_transform(pl: &PowerLognormal, s: f64) -> f64 {
    let (m, v) = pl.moments_db();
    let (lo, hi) = (m - 14.0 * v.sqrt(), m + 14.0 * v.sqrt());
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            let q = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * pl.pdf_db(q) * (-s * (q / ZETA).exp()).exp()
        })
        .sum::<f64>()
        * h
}

#[test]
fn laplace_fit_matches_independent_transform_at_three_levels() {
    let cells: Vec<GaussianApprox> = (0..6)
        .map(|i| GaussianApprox { mean: -120.0 - 4.0 * i as f64, var: 150.0 + 10.0 * i as f64 })
        .collect();
    let r = fit_power_lognormal_with(&cells, FitMethod::Laplace).unwrap();
    assert!(!r.lambda_at_bound, "{r:?}");
    for level in [0.9, 0.5, 0.1] {
        // Bisection in ln s for the point where the target equals `level`.
        let (mut a, mut b) = (-80.0f64, 80.0f64);
        for _ in 0..60 {
            let c = 0.5 * (a + b);
            if target_transform(&cells, c.exp()) > level {
                a = c;
            } else {
                b = c;
            }
        }
        let s = (0.5 * (a + b)).exp();
        let got = fitted_transform(&r.dist, s);
        assert!((got / level - 1.0).abs() < 1e-6, "level {level}: {got}");
    }
}

#[test]
fn raw_moment_fit_matches_independent_moments() {
    let cells: Vec<GaussianApprox> = (0..4)
        .map(|i| GaussianApprox { mean: -3.0 * i as f64, var: 4.0 + i as f64 })
        .collect();
    let r = fit_power_lognormal_with(&cells, FitMethod::RawMoments).unwrap();
    // Raw moments of the sum from the summed cumulants of the lognormal terms.
    let raw = |c: &GaussianApprox, k: f64| (k * c.mean / ZETA + k * k * c.var / (2.0 * ZETA * ZETA)).exp();
    let k1: f64 = cells.iter().map(|c| raw(c, 1.0)).sum();
    let k2: f64 = cells.iter().map(|c| raw(c, 2.0) - raw(c, 1.0).powi(2)).sum();
    let k3: f64 = cells
        .iter()
        .map(|c| raw(c, 3.0) - 3.0 * raw(c, 2.0) * raw(c, 1.0) + 2.0 * raw(c, 1.0).powi(3))
        .sum();
    let targets = [k1, k2 + k1 * k1, k3 + 3.0 * k2 * k1 + k1.powi(3)];
    let fitted = |k: f64| {
        let (m, v) = r.dist.moments_db();
        let (lo, hi) = (m - 14.0 * v.sqrt(), m + 14.0 * v.sqrt());
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let q = lo + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * r.dist.pdf_db(q) * (k * q / ZETA).exp()
            })
            .sum::<f64>()
            * h
    };
    for (k, want) in targets.iter().enumerate() {
        let got = fitted(k as f64 + 1.0);
        assert!((got / want - 1.0).abs() < 1e-6, "moment {}: {got} vs {want}", k + 1);
    }
}

#[test]
fn hex_analysis_meets_runtime_budget() {
    let dep = generate_hex_lattice(55.43, 228, &CellTemplate::default()).unwrap();
    let t = Instant::now();
    let a = analyze_cell(&dep, 0, &ChannelParams::default(), &FadingModel::Rayleigh, &AnalysisOptions::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    assert_eq!(a.interferers.len(), 227);
    assert!(secs < 60.0, "took {secs} s");
}

#[test]
fn simulated_median_is_stable_across_seeds() {
    let dep = generate_hex_lattice(55.43, 228, &CellTemplate::default()).unwrap();
    let medians: Vec<f64> = [11u64, 12]
        .iter()
        .map(|&seed| {
            let cfg = SimConfig { n_ue_drops: 10_000, n_channel_draws: 1000, seed, victim: Victim::Cell(0) };
            simulate(&dep, &ChannelParams::default(), &FadingModel::Rayleigh, &cfg).unwrap().sir.median()
        })
        .collect();
    assert!((medians[0] - medians[1]).abs() < 0.2, "{medians:?}");
}
