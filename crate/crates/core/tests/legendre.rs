mod common;

use kpzldp_core::{
    build_shock_tree, dual_height, dual_height_newton, lyapunov, lyapunov_from_duality, rate,
    rate_gradient, tree_decomposition_check, ProbeConfig,
};
use rand::Rng;

fn random_masses(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..3.0) })
        .collect()
}

#[test]
fn gradient_inverts_dual_height() {
    let mut rng = common::rng(31);
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let xs = common::locations(&mut rng, n, 0.3);
        let m = random_masses(&mut rng, n);
        let t = rng.random_range(0.2..=1.0);
        let hs = dual_height(t, &xs, &m).unwrap();
        let g = rate_gradient(&ProbeConfig::new(t, xs.clone(), hs).unwrap()).unwrap();
        assert!(common::max_abs_diff(&g, &m) < 1e-8, "xs {xs:?} m {m:?}: {g:?}");
    }
}

#[test]
fn newton_route_agrees() {
    let mut rng = common::rng(32);
    for _ in 0..30 {
        let n = rng.random_range(1..=4);
        let xs = common::locations(&mut rng, n, 0.3);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let a = dual_height(1.0, &xs, &m).unwrap();
        let b = dual_height_newton(1.0, &xs, &m).unwrap();
        assert!(common::max_abs_diff(&a, &b) < 1e-7, "xs {xs:?} m {m:?}: {a:?} vs {b:?}");
    }
}

#[test]
fn fenchel_young() {
    let mut rng = common::rng(33);
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let xs = common::locations(&mut rng, n, 0.3);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let pair = lyapunov_from_duality(1.0, &xs, &m).unwrap();
        let pairing = |h: &[f64]| h.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>();
        let equality = pairing(pair.config.hs()) - rate(&pair.config).value;
        assert!((equality - pair.lyapunov).abs() < 1e-8);

        let other = common::above_parabola(&mut rng, 1.0, n);
        let shifted = ProbeConfig::new(
            1.0,
            xs.clone(),
            xs.iter()
                .zip(other.hs().iter().zip(other.xs()))
                .map(|(&x, (&h, &y))| h + (y * y - x * x) / 2.0)
                .collect(),
        )
        .unwrap();
        if common::max_abs_diff(shifted.hs(), pair.config.hs()) > 1e-3 {
            let gap = pair.lyapunov - (pairing(shifted.hs()) - rate(&shifted).value);
            assert!(gap > 0.0, "non-dual pair reached the supremum: gap {gap}");
        }
    }
}

#[test]
fn one_point_exponent() {
    for m in [1.0, 2.0, 3.0] {
        for t in [0.25, 1.0] {
            let l = lyapunov(t, &[0.0], &[m]).unwrap();
            assert!((l - m * m * m * t / 24.0).abs() < 1e-10);
        }
    }
    // an off-centre delta pays the kinetic cost of travelling at speed x/t
    let (x, m, t) = (0.7, 1.5, 0.6);
    let l = lyapunov(t, &[x], &[m]).unwrap();
    assert!((l - (m * m * m * t / 24.0 - m * x * x / (2.0 * t))).abs() < 1e-12);
}

#[test]
fn tree_identity_on_random_configs() {
    for cfg in common::interior_batch(34, 10, 3) {
        let tree = build_shock_tree(&cfg).unwrap();
        let mut times = vec![0.3, 0.6, 0.85];
        if let Some(e) = tree.events.first() {
            let tm = 1.0 - e.s;
            for d in [-1e-3, 1e-3] {
                if tm + d > 0.0 && tm + d < 1.0 {
                    times.push(tm + d);
                }
            }
        }
        for t_mid in times {
            let check = tree_decomposition_check(&cfg, t_mid).unwrap();
            assert!(
                (check.lhs - check.rhs).abs() < 1e-8,
                "{cfg:?} t'={t_mid}: {} vs {}",
                check.lhs,
                check.rhs
            );
            assert!(check.intermediate_residual < 1e-8);
        }
    }
}

#[test]
fn tree_check_rejects_boundary_configs() {
    let cfg = ProbeConfig::new(1.0, vec![0.0], vec![0.0]).unwrap();
    assert!(tree_decomposition_check(&cfg, 0.5).is_err());
    let cfg = ProbeConfig::new(1.0, vec![0.0], vec![1.0]).unwrap();
    assert!(tree_decomposition_check(&cfg, 1.0).is_err());
}
