mod common;

use kpzldp_core::{build_profile, rate, rate_gradient, ProbeConfig};
use proptest::prelude::*;

fn value(cfg: &ProbeConfig) -> f64 {
    rate(cfg).value
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = common::rng(21);
    for _ in 0..50 {
        let cfg = common::interior(&mut rng, 1.0, 4);
        let g = rate_gradient(&cfg).unwrap();
        for c in 0..cfg.n() {
            let step = 1e-6;
            let mut up = cfg.hs().to_vec();
            let mut down = cfg.hs().to_vec();
            up[c] += step;
            down[c] -= step;
            let fd = (value(&cfg.with_heights(up).unwrap()) - value(&cfg.with_heights(down).unwrap()))
                / (2.0 * step);
            assert!((fd - g[c]).abs() < 1e-6 * (1.0 + g[c].abs()), "{cfg:?} c={c}: {fd} vs {}", g[c]);
        }
    }
}

/// `∫ ½ f'^2 - ½ (x/t)^2` by the midpoint rule with slopes from differences
/// of the envelope values. Cells containing a kink limit the accuracy to O(h).
fn quadrature(cfg: &ProbeConfig) -> f64 {
    let p = build_profile(cfg);
    let t = cfg.t();
    let h = 1e-5;
    (-1_000_000..1_000_000)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let slope = (p.eval(x + 0.5 * h) - p.eval(x - 0.5 * h)) / h;
            (0.5 * slope * slope - 0.5 * (x / t).powi(2)) * h
        })
        .sum()
}

#[test]
fn closed_form_matches_quadrature() {
    let mut rng = common::rng(22);
    for k in 0..6 {
        let t = [1.0, 0.5, 0.8][k % 3];
        let cfg = common::above_parabola(&mut rng, t, 1 + k % 3);
        let q = quadrature(&cfg);
        assert!((value(&cfg) - q).abs() < 1e-4, "{cfg:?}: {} vs {q}", value(&cfg));
    }
}

#[test]
fn one_point_power_law() {
    for t in [0.25, 0.5, 1.0] {
        for h in [0.1, 0.25, 1.0, 4.0] {
            let cfg = ProbeConfig::new(t, vec![0.0], vec![h]).unwrap();
            let expected = 4.0 / 3.0 * (2.0 / t).sqrt() * h.powf(1.5);
            assert!((value(&cfg) - expected).abs() < 1e-12 * (1.0 + expected));
        }
    }
}

fn interior_strategy() -> impl Strategy<Value = ProbeConfig> {
    any::<u64>().prop_map(|seed| {
        let mut rng = common::rng(seed);
        common::interior(&mut rng, 1.0, 4)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Rescaling space and time by `c` and heights by `c` rescales the rate by `c`.
    #[test]
    fn scaling_law(cfg in interior_strategy(), c in 0.2f64..1.0) {
        let scaled = ProbeConfig::new(
            c * cfg.t(),
            cfg.xs().iter().map(|x| c * x).collect(),
            cfg.hs().iter().map(|h| c * h).collect(),
        ).unwrap();
        let (a, b) = (c * value(&cfg), value(&scaled));
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn monotone_in_heights(cfg in interior_strategy(), bump in 0.0f64..1.0, which in 0usize..4) {
        let c = which % cfg.n();
        let mut hs = cfg.hs().to_vec();
        hs[c] += bump;
        let higher = cfg.with_heights(hs).unwrap();
        prop_assert!(value(&higher) >= value(&cfg) - 1e-12);
    }

    #[test]
    fn convex_in_heights(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let a = common::interior(&mut rng, 1.0, 3);
        let other = common::above_parabola(&mut rng, 1.0, a.n());
        let b = a.with_heights(
            a.xs().iter().zip(other.hs().iter().zip(other.xs()))
                .map(|(&x, (&h, &x2))| h + (x2 * x2 - x * x) / 2.0)
                .collect(),
        ).unwrap();
        let mix = a.with_heights(
            a.hs().iter().zip(b.hs()).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect(),
        ).unwrap();
        let bound = lambda * value(&a) + (1.0 - lambda) * value(&b);
        prop_assert!(value(&mix) <= bound + 1e-10 * (1.0 + bound.abs()));
    }

    /// A probe added on the envelope changes neither the rate nor the other
    /// gradient entries, and carries zero gradient off the kinks.
    #[test]
    fn extension_consistency(cfg in interior_strategy(), x_new in -3.0f64..3.0) {
        prop_assume!(cfg.xs().iter().all(|x| (x - x_new).abs() > 1e-3));
        let p = build_profile(&cfg);
        let mut pts: Vec<(f64, f64)> = cfg.xs().iter().copied().zip(cfg.hs().iter().copied()).collect();
        pts.push((x_new, p.eval(x_new)));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ext = ProbeConfig::new(1.0, pts.iter().map(|q| q.0).collect(), pts.iter().map(|q| q.1).collect()).unwrap();
        prop_assert!((value(&ext) - value(&cfg)).abs() < 1e-10 * (1.0 + value(&cfg)));
        let g = rate_gradient(&ext).unwrap();
        let k = pts.iter().position(|q| q.0 == x_new).unwrap();
        prop_assert!(g[k].abs() < 1e-8);
    }
}
