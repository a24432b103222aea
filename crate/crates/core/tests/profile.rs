mod common;

use kpzldp_core::{
    build_profile, classify, parabola_eval, reduce_indices, MembershipClass, ProbeConfig,
};
use proptest::prelude::*;

/// Upper concave envelope of the probe points and the parabola at `x`, by
/// brute force over chords between probes and points of a dense parabola grid.
fn brute_envelope(cfg: &ProbeConfig, x: f64) -> f64 {
    let t = cfg.t();
    let step = 1e-3;
    let grid: Vec<(f64, f64)> = (-12_000..=12_000)
        .map(|i| {
            let y = i as f64 * step;
            (y, parabola_eval(t, y).unwrap())
        })
        .collect();
    let probes: Vec<(f64, f64)> = cfg.xs().iter().copied().zip(cfg.hs().iter().copied()).collect();
    let chord = |(xa, ha): (f64, f64), (xb, hb): (f64, f64)| -> Option<f64> {
        if xa <= x && x <= xb && xb > xa {
            Some(ha + (hb - ha) * (x - xa) / (xb - xa))
        } else {
            None
        }
    };
    let mut best = parabola_eval(t, x).unwrap();
    for &p in &probes {
        if p.0 == x {
            best = best.max(p.1);
        }
        for &q in &probes {
            if let Some(v) = chord(p, q) {
                best = best.max(v);
            }
        }
        for &g in &grid {
            if let Some(v) = chord(p, g).or_else(|| chord(g, p)) {
                best = best.max(v);
            }
        }
    }
    best
}

#[test]
fn envelope_matches_brute_force() {
    let mut rng = common::rng(11);
    for k in 0..12 {
        let t = if k % 2 == 0 { 1.0 } else { 0.5 };
        let n = 1 + k % 4;
        let mut cfg = common::above_parabola(&mut rng, t, n);
        if k % 3 == 0 {
            // push one probe below the parabola
            let mut hs = cfg.hs().to_vec();
            hs[0] = parabola_eval(t, cfg.xs()[0]).unwrap() - 0.3;
            cfg = cfg.with_heights(hs).unwrap();
        }
        let profile = build_profile(&cfg);
        for i in -40..=40 {
            let x = i as f64 * 0.1 + 0.013;
            let exact = profile.eval(x);
            let brute = brute_envelope(&cfg, x);
            assert!(
                (exact - brute).abs() < 1e-5,
                "cfg {cfg:?} x {x}: {exact} vs {brute}"
            );
        }
    }
}

fn config_strategy() -> impl Strategy<Value = ProbeConfig> {
    (0.1f64..=1.0, prop::collection::vec((-3.0f64..3.0, -1.0f64..2.5), 1..6)).prop_filter_map(
        "distinct locations",
        |(t, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.windows(2).any(|w| w[1].0 - w[0].0 < 1e-3) {
                return None;
            }
            let xs = pts.iter().map(|p| p.0).collect();
            let hs = pts.iter().map(|p| p.1 - p.0 * p.0 / (2.0 * t)).collect();
            ProbeConfig::new(t, xs, hs).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn envelope_dominates_and_is_concave(cfg in config_strategy()) {
        let p = build_profile(&cfg);
        prop_assert!(p.check_invariants().is_ok());
        let t = cfg.t();
        for (&x, &h) in cfg.xs().iter().zip(cfg.hs()) {
            prop_assert!(p.eval(x) >= h - 1e-12 * (1.0 + h.abs()));
        }
        let xs: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.1).collect();
        for &x in &xs {
            prop_assert!(p.eval(x) >= parabola_eval(t, x).unwrap() - 1e-12);
        }
        for w in xs.windows(3) {
            let mid = 0.5 * (p.eval(w[0]) + p.eval(w[2]));
            prop_assert!(p.eval(w[1]) >= mid - 1e-9);
        }
    }

    #[test]
    fn envelope_is_idempotent(cfg in config_strategy()) {
        let p = build_profile(&cfg);
        let lifted = cfg.with_heights(cfg.xs().iter().map(|&x| p.eval(x)).collect()).unwrap();
        let q = build_profile(&lifted);
        for i in -50..=50 {
            let x = i as f64 * 0.11;
            prop_assert!((p.eval(x) - q.eval(x)).abs() < 1e-10 * (1.0 + p.eval(x).abs()));
        }
        prop_assert!(classify(&lifted).is_concave());
    }

    #[test]
    fn reduced_probes_determine_envelope(cfg in config_strategy()) {
        let p = build_profile(&cfg);
        let reduced = reduce_indices(&cfg);
        for &c in &reduced {
            let (x, h) = (cfg.xs()[c], cfg.hs()[c]);
            prop_assert!((p.eval(x) - h).abs() <= 1e-9 * (1.0 + h.abs()));
        }
        if reduced.is_empty() {
            prop_assert!(p.is_parabola());
        } else {
            let q = build_profile(&cfg.restrict(&reduced).unwrap());
            for i in -50..=50 {
                let x = i as f64 * 0.11;
                prop_assert!((p.eval(x) - q.eval(x)).abs() < 1e-10 * (1.0 + p.eval(x).abs()));
            }
        }
    }

    #[test]
    fn classification_is_consistent(cfg in config_strategy()) {
        let class = classify(&cfg);
        let t = cfg.t();
        let below = cfg.xs().iter().zip(cfg.hs()).any(|(&x, &h)| h < parabola_eval(t, x).unwrap() - 1e-12 * (1.0 + h.abs()));
        prop_assert_eq!(class == MembershipClass::OutsideH, below);
        if class.is_concave() {
            prop_assert_eq!(reduce_indices(&cfg).len(), cfg.n());
        }
    }
}
