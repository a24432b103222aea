#![allow(dead_code)]

use kpzldp_core::{classify, parabola_eval, MembershipClass, ProbeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sorted locations in `[-2, 2]` at least `gap` apart.
pub fn locations(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Vec<f64> {
    loop {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] >= gap) {
            return xs;
        }
    }
}

/// Random configuration at horizon `t` with heights above the parabola.
pub fn above_parabola(rng: &mut ChaCha8Rng, t: f64, n: usize) -> ProbeConfig {
    let xs = locations(rng, n, 0.3);
    let hs = xs
        .iter()
        .map(|&x| parabola_eval(t, x).unwrap() + rng.random_range(0.1..2.0))
        .collect();
    ProbeConfig::new(t, xs, hs).unwrap()
}

/// Random strictly concave configuration with `1..=n_max` probes.
pub fn interior(rng: &mut ChaCha8Rng, t: f64, n_max: usize) -> ProbeConfig {
    loop {
        let n = rng.random_range(1..=n_max);
        let cfg = above_parabola(rng, t, n);
        if classify(&cfg) == MembershipClass::InHconcInterior {
            return cfg;
        }
    }
}

pub fn interior_batch(seed: u64, count: usize, n_max: usize) -> Vec<ProbeConfig> {
    let mut r = rng(seed);
    (0..count).map(|_| interior(&mut r, 1.0, n_max)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
