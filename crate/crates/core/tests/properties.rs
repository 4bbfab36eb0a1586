use dnaga::analysis::{
    fit_power_lognormal, signal_cdf, sir_cdf, tabulate, GaussianApprox, PowerLognormal, SignalCdf, SirCdf,
};
use dnaga::channel::ChannelParams;
use dnaga::fading::FadingModel;
use dnaga::quadrature::{digamma, gauss_hermite, std_normal_cdf, trigamma};
use dnaga::scenario::{generate_hotspot, HotspotConfig, Point};
use proptest::prelude::*;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// ∫ y^{2j} e^{−y²} dy = Γ(j + 1/2) = (2j − 1)!! √π / 2^j.
fn even_moment(j: u32) -> f64 {
    let mut v = SQRT_PI;
    for i in 1..=j {
        v *= (2 * i - 1) as f64 / 2.0;
    }
    v
}

fn fading_strategy() -> impl Strategy<Value = FadingModel> {
    prop_oneof![
        Just(FadingModel::Rayleigh),
        (0.5f64..20.0, 0.05f64..2.0).prop_map(|(k, theta)| FadingModel::Nakagami { k, theta }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gh_rules_integrate_even_monomials(order in 1usize..=30, jj in 0u32..60) {
        let j = jj % order as u32;
        let rule = gauss_hermite(order).unwrap();
        let got = rule.integrate(|y| y.powi(2 * j as i32));
        let want = even_moment(j);
        prop_assert!(((got - want) / want).abs() < 1e-10, "order {order}, j {j}: {got} vs {want}");
        let odd = rule.integrate(|y| y.powi(2 * j as i32 + 1));
        prop_assert!(odd.abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn gh_weights_sum_to_sqrt_pi(order in 1usize..=300) {
        let rule = gauss_hermite(order).unwrap();
        let s: f64 = rule.weights.iter().sum();
        prop_assert!((s / SQRT_PI - 1.0).abs() < 1e-10);
        prop_assert!(rule.weights.iter().all(|&w| w > 0.0));
        for (a, b) in rule.nodes.iter().zip(rule.nodes.iter().rev()) {
            prop_assert!((a + b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn normal_cdf_is_monotone(x in -40.0f64..40.0, dx in 0.0f64..5.0) {
        prop_assert!(std_normal_cdf(x + dx) >= std_normal_cdf(x));
        prop_assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn digamma_recurrence(x in 0.05f64..80.0) {
        let lhs = digamma(x + 1.0).unwrap();
        let rhs = digamma(x).unwrap() + 1.0 / x;
        prop_assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1.0));
        let lhs = trigamma(x + 1.0).unwrap();
        let rhs = trigamma(x).unwrap() - 1.0 / (x * x);
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn fading_cdf_is_monotone(f in fading_strategy(), h in -80.0f64..30.0, dh in 0.0f64..10.0) {
        prop_assert!(f.cdf_db(h + dh) >= f.cdf_db(h));
        prop_assert!((0.0..=1.0).contains(&f.cdf_db(h)));
    }

    #[test]
    fn regions_are_disjoint(seed in 0u64..1000, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let cfg = HotspotConfig { n_sites: 1, cells_per_macrocell: 6, ..Default::default() };
        let dep = generate_hotspot(&cfg, seed).unwrap();
        let b = dep.bounds;
        let p = Point::new(
            b.min.x - 0.05 + u * (b.max.x - b.min.x + 0.1),
            b.min.y - 0.05 + v * (b.max.y - b.min.y + 0.1),
        );
        let owners = (0..dep.len()).filter(|&c| dep.region_contains(c, &p)).count();
        prop_assert!(owners <= 1);
    }

    #[test]
    fn degenerate_signal_reduces_to_fading(f in fading_strategy(), mu in -100.0f64..-80.0, x in -120.0f64..-60.0) {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: mu, var: 0.0 };
        prop_assert!((signal_cdf(&g, &f, &rule, x) - f.cdf_db(x - mu)).abs() < 1e-6);
    }

    #[test]
    fn degenerate_interference_shifts_signal(
        f in fading_strategy(),
        mu in -100.0f64..-80.0,
        var in 0.0f64..20.0,
        mu_q in -150.0f64..-100.0,
        z in -20.0f64..60.0,
    ) {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: mu, var };
        let pl = PowerLognormal::new(1.0, mu_q, 1e-9).unwrap();
        let a = sir_cdf(&g, &f, &pl, &rule, z);
        let b = signal_cdf(&g, &f, &rule, z + mu_q);
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn single_cell_fit_is_the_cell(mean in -160.0f64..-90.0, var in 1.0f64..300.0) {
        let r = fit_power_lognormal(&[GaussianApprox { mean, var }]).unwrap();
        prop_assert!((r.dist.lambda - 1.0).abs() < 1e-6, "{:?}", r);
        prop_assert!((r.dist.mu_q - mean).abs() < 1e-6);
        prop_assert!((r.dist.sigma_q - var.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn interference_shadow_dominates_signal_shadow(eta in 1e-6f64..=1.0, sigma in 0.01f64..20.0) {
        let p = ChannelParams { eta, sigma_shadow_db: sigma, ..Default::default() };
        prop_assert!(p.interference_shadow_moments().1 > p.signal_shadow_moments().1);
    }
}

#[test]
fn tabulated_curves_stay_monotone_on_their_grid() {
    let rule = gauss_hermite(30).unwrap();
    let g = GaussianApprox { mean: -93.0, var: 5.0 };
    let f = FadingModel::Rayleigh;
    let s = SignalCdf::new(&g, &f, &rule);
    let c = tabulate(-95.0, 6.0, 1000, |x| s.eval(x)).unwrap();
    assert!(c.probs.windows(2).all(|w| w[1] >= w[0]));
}

proptest! {
    // Each case walks three 1000-point curves; the SIR sum is the costly one.
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn analytic_curves_are_monotone(
        f in fading_strategy(),
        mu in -110.0f64..-80.0,
        var in 0.0f64..30.0,
        lambda in 0.5f64..500.0,
        mu_q in -160.0f64..-100.0,
        sd_q in 1.0f64..20.0,
    ) {
        let rule = gauss_hermite(30).unwrap();
        let g = GaussianApprox { mean: mu, var };
        let pl = PowerLognormal::new(lambda, mu_q, sd_q).unwrap();
        let (mh, vh) = f.moments_db();
        let (mq, vq) = pl.moments_db();
        let sig = SignalCdf::new(&g, &f, &rule);
        let sir = SirCdf::new(&g, &f, &pl, &rule);
        let sd_z = (var + vh + vq).sqrt();
        let mut prev = (0.0, 0.0, 0.0);
        for i in 0..1000 {
            let t = -8.0 + 16.0 * i as f64 / 999.0;
            let x = mu + mh + t * (var + vh).sqrt();
            let z = mu + mh - mq + t * sd_z;
            let q = mq + t * vq.sqrt();
            let cur = (sig.eval(x), sir.eval(z), pl.cdf_db(q));
            for (c, p) in [(cur.0, prev.0), (cur.1, prev.1), (cur.2, prev.2)] {
                prop_assert!((0.0..=1.0).contains(&c));
                prop_assert!(c >= p - 1e-12, "drop at t={t}: {c} < {p}");
            }
            prev = cur;
        }
    }
}
