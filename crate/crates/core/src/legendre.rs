//! Moment Lyapunov exponents by Legendre duality with the rate function.
//!
//! Dual heights solve `∇I(h) = m`. The gradient is the vector of corner
//! angles of the terminal profile, so on a cluster of probes joined by chords
//! every slope is fixed by the leftmost flank slope and the cumulative masses.
//! Tangency of both flanks to the parabola then leaves one linear equation
//! for that slope. Clusters are found by merging neighbours whose flanks
//! overlap, and the result is always checked by recomputing the gradient; a
//! damped Newton iteration is the fallback.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{build_profile, classify, parab, validate_locations, validate_time, MembershipClass, ProbeConfig};
use crate::rate::{rate, rate_gradient};
use crate::shape::{evaluate_m, CorridorEnsemble, LimitShape};

/// Residual accepted for `∇I(h) = m`, in max norm.
pub const DUAL_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 200;

/// Heights, their dual masses and the Lyapunov exponent `m·h - I(h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub config: ProbeConfig,
    pub masses: Vec<f64>,
    pub lyapunov: f64,
}

fn validate_masses(xs: &[f64], masses: &[f64]) -> Result<()> {
    if masses.len() != xs.len() {
        return Err(Error::config(
            "masses",
            format!("expected {} masses, got {}", xs.len(), masses.len()),
        ));
    }
    if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::Domain(format!("masses must be finite and nonnegative, got {m}")));
    }
    Ok(())
}

/// A run of consecutive probes joined by chords.
struct Block {
    xs: Vec<f64>,
    masses: Vec<f64>,
    idx: Vec<usize>,
    /// Slope of the left flank.
    left_slope: f64,
    right_slope: f64,
}

impl Block {
    fn solve(t: f64, xs: Vec<f64>, masses: Vec<f64>, idx: Vec<usize>) -> Self {
        let total: f64 = masses.iter().sum();
        let last = *xs.last().unwrap();
        let mut cumulative = 0.0;
        let mut chord_sum = 0.0;
        for k in 0..xs.len() - 1 {
            cumulative += masses[k];
            chord_sum += cumulative * (xs[k + 1] - xs[k]);
        }
        let left_slope = (0.5 * total * total * t + chord_sum - total * last) / (total * t);
        Self {
            right_slope: left_slope - total,
            xs,
            masses,
            idx,
            left_slope,
        }
    }

    fn heights(&self, t: f64) -> Vec<f64> {
        let mut hs = Vec::with_capacity(self.xs.len());
        let mut slope = self.left_slope;
        let mut h = 0.5 * slope * slope * t + slope * self.xs[0];
        hs.push(h);
        for k in 0..self.xs.len() - 1 {
            slope -= self.masses[k];
            h += slope * (self.xs[k + 1] - self.xs[k]);
            hs.push(h);
        }
        hs
    }

    /// Tangency points of the flanks with the parabola.
    fn left_touch(&self, t: f64) -> f64 {
        -self.left_slope * t
    }

    fn right_touch(&self, t: f64) -> f64 {
        -self.right_slope * t
    }
}

fn max_residual(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Positive-mass probes solved cluster by cluster; zero-mass probes are
/// placed on the envelope of the others.
fn structured_heights(t: f64, xs: &[f64], masses: &[f64]) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..xs.len()).filter(|&c| masses[c] > 0.0).collect();
    let mut hs = vec![0.0; xs.len()];
    if active.is_empty() {
        for (h, &x) in hs.iter_mut().zip(xs) {
            *h = parab(t, x);
        }
        return Ok(hs);
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(active.len());
    for &c in &active {
        let mut block = Block::solve(t, vec![xs[c]], vec![masses[c]], vec![c]);
        while let Some(prev) = blocks.last() {
            if prev.right_touch(t) > block.left_touch(t) {
                let prev = blocks.pop().unwrap();
                let mut bx = prev.xs;
                let mut bm = prev.masses;
                let mut bi = prev.idx;
                bx.extend(block.xs);
                bm.extend(block.masses);
                bi.extend(block.idx);
                block = Block::solve(t, bx, bm, bi);
            } else {
                break;
            }
        }
        blocks.push(block);
    }
    for block in &blocks {
        for (&c, h) in block.idx.iter().zip(block.heights(t)) {
            hs[c] = h;
        }
    }
    if active.len() < xs.len() {
        let sub = ProbeConfig::new(
            t,
            active.iter().map(|&c| xs[c]).collect(),
            active.iter().map(|&c| hs[c]).collect(),
        )?;
        let profile = build_profile(&sub);
        for c in (0..xs.len()).filter(|&c| masses[c] == 0.0) {
            hs[c] = profile.eval(xs[c]);
        }
    }
    Ok(hs)
}

fn gradient_residual(cfg: &ProbeConfig, masses: &[f64]) -> Result<f64> {
    Ok(max_residual(&rate_gradient(cfg)?, masses))
}

fn residual_tol(masses: &[f64]) -> f64 {
    DUAL_TOL * (1.0 + masses.iter().fold(0.0f64, |a, &m| a.max(m)))
}

/// Unique heights whose rate gradient equals the given masses.
pub fn dual_height(t: f64, xs: &[f64], masses: &[f64]) -> Result<Vec<f64>> {
    validate_time(t)?;
    validate_locations(xs)?;
    validate_masses(xs, masses)?;
    let hs = structured_heights(t, xs, masses)?;
    let cfg = ProbeConfig::new(t, xs.to_vec(), hs.clone())?;
    if gradient_residual(&cfg, masses)? <= residual_tol(masses) {
        return Ok(hs);
    }
    newton_from(t, xs, masses, hs)
}

/// Dual heights by damped Newton iteration on `∇I(h) = m`, started from the
/// decoupled one-probe solutions `h_c = m_c^2 t / 8 + p(t, x_c)`.
pub fn dual_height_newton(t: f64, xs: &[f64], masses: &[f64]) -> Result<Vec<f64>> {
    validate_time(t)?;
    validate_locations(xs)?;
    validate_masses(xs, masses)?;
    let start = xs
        .iter()
        .zip(masses)
        .map(|(&x, &m)| m * m * t / 8.0 + parab(t, x))
        .collect();
    newton_from(t, xs, masses, start)
}

fn newton_from(t: f64, xs: &[f64], masses: &[f64], start: Vec<f64>) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..xs.len()).filter(|&c| masses[c] > 0.0).collect();
    if active.is_empty() {
        return structured_heights(t, xs, masses);
    }
    let axs: Vec<f64> = active.iter().map(|&c| xs[c]).collect();
    let target: Vec<f64> = active.iter().map(|&c| masses[c]).collect();
    let residual = |h: &[f64]| -> Result<Vec<f64>> {
        let cfg = ProbeConfig::new(t, axs.clone(), h.to_vec())?;
        let g = rate(&cfg).gradient;
        Ok(g.iter().zip(&target).map(|(g, m)| g - m).collect())
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = residual_tol(&target);
    let n = active.len();
    let mut h: Vec<f64> = active.iter().map(|&c| start[c]).collect();
    let mut r = residual(&h)?;
    let mut converged = norm(&r) <= tol;
    for _ in 0..NEWTON_MAX_ITER {
        if converged {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let step = 1e-6 * (1.0 + h[j].abs());
            let mut hp = h.clone();
            let mut hm = h.clone();
            hp[j] += step;
            hm[j] -= step;
            let (rp, rm) = (residual(&hp)?, residual(&hm)?);
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * step);
            }
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs);
        let mut improved = false;
        if let Some(step) = step {
            let mut lambda = 1.0;
            while lambda > 1e-6 {
                let trial: Vec<f64> = h.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
                let rt = residual(&trial)?;
                if norm(&rt) < norm(&r) {
                    h = trial;
                    r = rt;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if !improved {
            // A coordinate sweep: each corner angle grows with its own height.
            coordinate_sweep(&mut h, &target, &residual)?;
            r = residual(&h)?;
        }
        converged = norm(&r) <= tol;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "dual height iteration did not converge after {NEWTON_MAX_ITER} steps; residual {:.3e}, heights {h:?}",
            norm(&r)
        )));
    }
    let mut full = vec![0.0; xs.len()];
    for (&c, &v) in active.iter().zip(&h) {
        full[c] = v;
    }
    if active.len() < xs.len() {
        let profile = build_profile(&ProbeConfig::new(t, axs, h)?);
        for c in (0..xs.len()).filter(|&c| masses[c] == 0.0) {
            full[c] = profile.eval(xs[c]);
        }
    }
    Ok(full)
}

fn coordinate_sweep(
    h: &mut [f64],
    target: &[f64],
    residual: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    for c in 0..h.len() {
        let excess = |h: &[f64]| -> Result<f64> { Ok(residual(h)?[c]) };
        let mut lo = h[c];
        let mut hi = h[c];
        let mut width = 1e-3 * (1.0 + h[c].abs() + target[c]);
        let mut probe = h.to_vec();
        if excess(h)? > 0.0 {
            loop {
                lo -= width;
                width *= 2.0;
                probe[c] = lo;
                if excess(&probe)? <= 0.0 {
                    break;
                }
            }
        } else {
            loop {
                hi += width;
                width *= 2.0;
                probe[c] = hi;
                if excess(&probe)? >= 0.0 {
                    break;
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            probe[c] = mid;
            if excess(&probe)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        h[c] = 0.5 * (lo + hi);
    }
    Ok(())
}

/// `sup_r ( r·m - I(r) )` together with its maximiser.
pub fn lyapunov_from_duality(t: f64, xs: &[f64], masses: &[f64]) -> Result<DualPair> {
    let hs = dual_height(t, xs, masses)?;
    let config = ProbeConfig::new(t, xs.to_vec(), hs)?;
    let pairing: f64 = config.hs().iter().zip(masses).map(|(h, m)| h * m).sum();
    let lyapunov = pairing - rate(&config).value;
    Ok(DualPair {
        config,
        masses: masses.to_vec(),
        lyapunov,
    })
}

/// Lyapunov exponent from the origin to `(xs, masses)` over time `t`.
pub fn lyapunov(t: f64, xs: &[f64], masses: &[f64]) -> Result<f64> {
    Ok(lyapunov_from_duality(t, xs, masses)?.lyapunov)
}

/// Clusters of corridors at an intermediate time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateSplit {
    pub t_mid: f64,
    pub cluster_positions: Vec<f64>,
    pub cluster_heights: Vec<f64>,
    pub cluster_masses: Vec<f64>,
    pub branches: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub t_mid: f64,
    /// Max-norm residual of `∇I(t_mid, x', h') = m'`.
    pub intermediate_residual: f64,
    pub split: IntermediateSplit,
}

impl TreeCheck {
    /// Report layout: `lhs, rhs, t_mid, clusters[]`.
    pub fn report(&self) -> serde_json::Value {
        let s = &self.split;
        let clusters: Vec<serde_json::Value> = (0..s.cluster_positions.len())
            .map(|a| {
                serde_json::json!({
                    "position": s.cluster_positions[a],
                    "height": s.cluster_heights[a],
                    "mass": s.cluster_masses[a],
                    "branch": s.branches[a],
                })
            })
            .collect();
        serde_json::json!({
            "lhs": self.lhs,
            "rhs": self.rhs,
            "t_mid": self.t_mid,
            "intermediate_residual": self.intermediate_residual,
            "clusters": clusters,
        })
    }
}

/// Splits the Lyapunov exponent at an intermediate time along the corridor
/// tree and returns both sides of the additivity identity.
pub fn tree_decomposition_check(cfg: &ProbeConfig, t_mid: f64) -> Result<TreeCheck> {
    let horizon = cfg.t();
    if classify(cfg) != MembershipClass::InHconcInterior {
        return Err(Error::Domain(
            "tree decomposition needs a strictly concave configuration above the parabola".into(),
        ));
    }
    if !(t_mid > 0.0 && t_mid < horizon) {
        return Err(Error::Domain(format!("t_mid must lie in (0, {horizon}), got {t_mid}")));
    }
    let masses = rate_gradient(cfg)?;
    let shape = LimitShape::build(cfg)?;
    let lhs = lyapunov(horizon, cfg.xs(), &masses)?;

    let clusters = shape.tree().clusters_at(horizon - t_mid);
    let cluster_positions: Vec<f64> = clusters.iter().map(|c| c.position).collect();
    let branches: Vec<Vec<usize>> = clusters.iter().map(|c| c.leaves.clone()).collect();
    let cluster_masses: Vec<f64> = branches
        .iter()
        .map(|b| b.iter().map(|&c| masses[c]).sum())
        .collect();
    let cluster_heights = cluster_positions
        .iter()
        .map(|&x| shape.eval(t_mid, x))
        .collect::<Result<Vec<f64>>>()?;

    let head = lyapunov(t_mid, &cluster_positions, &cluster_masses)?;
    let mut tails = 0.0;
    for (&origin, branch) in cluster_positions.iter().zip(&branches) {
        let shifted: Vec<f64> = branch.iter().map(|&c| cfg.xs()[c] - origin).collect();
        let bm: Vec<f64> = branch.iter().map(|&c| masses[c]).collect();
        tails += lyapunov(horizon - t_mid, &shifted, &bm)?;
    }

    let mid_cfg = ProbeConfig::new(t_mid, cluster_positions.clone(), cluster_heights.clone())?;
    let intermediate_residual = gradient_residual(&mid_cfg, &cluster_masses)?;
    Ok(TreeCheck {
        lhs,
        rhs: head + tails,
        t_mid,
        intermediate_residual,
        split: IntermediateSplit {
            t_mid,
            cluster_positions,
            cluster_heights,
            cluster_masses,
            branches,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub m_minus: f64,
    /// Exponent from duality.
    #[serde(rename = "L")]
    pub l: f64,
    /// Moment functional on the two-corridor ensemble.
    pub l_functional: f64,
    /// First backward time at which the two corridors merge, if they do.
    pub s_merge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryScan {
    pub m: f64,
    pub points: Vec<ScanPoint>,
    /// Largest `|L(m_-) - L(m - m_-)|` over mirrored grid points.
    pub mirror_defect: f64,
    /// Largest gap between the two exponent routes.
    pub route_defect: f64,
    pub endpoint_value: f64,
    pub interior_max: f64,
    /// `endpoint_value - interior_max`.
    pub margin: f64,
}

impl SymmetryScan {
    /// Grid indices attaining the supremum. Endpoint ties are resolved by
    /// mirror symmetry instead of comparing floats.
    pub fn maximizers(&self) -> Vec<usize> {
        let last = self.points.len() - 1;
        if self.margin > 0.0 {
            vec![0, last]
        } else {
            let best = self.points.iter().map(|p| p.l).fold(f64::NEG_INFINITY, f64::max);
            (0..=last).filter(|&i| self.points[i].l == best).collect()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m_minus,L\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.m_minus, p.l));
        }
        out
    }
}

fn scan_point(m: f64, m_minus: f64) -> Result<ScanPoint> {
    let xs = [-1.0, 1.0];
    let masses = [m_minus, m - m_minus];
    let pair = lyapunov_from_duality(1.0, &xs, &masses)?;
    let shape = LimitShape::build(&pair.config)?;
    let tree = shape.tree().with_masses(&masses)?;
    let ensemble = CorridorEnsemble::from_tree(&tree)?;
    let l_functional = evaluate_m(&ensemble, 0.0, 1.0)?;
    let s_merge = if m_minus > 0.0 && m_minus < m {
        tree.merge_time(0, 1)
    } else {
        None
    };
    Ok(ScanPoint {
        m_minus,
        l: pair.lyapunov,
        l_functional,
        s_merge,
    })
}

/// Exponent of the two-delta start at `±1` observed at the origin, as a
/// function of how the total mass `m` is shared between the two deltas.
pub fn symmetry_breaking_scan(m: f64, grid_points: usize) -> Result<SymmetryScan> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("total mass must be positive, got {m}")));
    }
    if grid_points < 3 {
        return Err(Error::Domain(format!("need at least 3 grid points, got {grid_points}")));
    }
    let last = grid_points - 1;
    let points = (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let m_minus = match i {
                0 => 0.0,
                i if i == last => m,
                i => m * i as f64 / last as f64,
            };
            scan_point(m, m_minus)
        })
        .collect::<Result<Vec<ScanPoint>>>()?;
    let mirror_defect = (0..grid_points)
        .map(|i| (points[i].l - points[last - i].l).abs())
        .fold(0.0, f64::max);
    let route_defect = points
        .iter()
        .map(|p| (p.l - p.l_functional).abs())
        .fold(0.0, f64::max);
    let endpoint_value = points[0].l.max(points[last].l);
    let interior_max = points[1..last]
        .iter()
        .map(|p| p.l)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SymmetryScan {
        m,
        points,
        mirror_defect,
        route_defect,
        endpoint_value,
        interior_max,
        margin: endpoint_value - interior_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_duals() {
        let pair = lyapunov_from_duality(1.0, &[0.0], &[2.0]).unwrap();
        assert!((pair.lyapunov - 1.0 / 3.0).abs() < 1e-14);
        assert!((pair.config.hs()[0] - 0.5).abs() < 1e-14);

        let pair = lyapunov_from_duality(1.0, &[1.0], &[2.0]).unwrap();
        assert!((pair.lyapunov + 2.0 / 3.0).abs() < 1e-14);

        for t in [0.3, 1.0] {
            let pair = lyapunov_from_duality(t, &[-0.5, 0.7], &[0.0, 0.0]).unwrap();
            assert_eq!(pair.lyapunov, 0.0);
            assert_eq!(pair.config.hs(), &[parab(t, -0.5), parab(t, 0.7)]);
        }
    }

    #[test]
    fn dual_height_examples() {
        let h = dual_height(1.0, &[0.0], &[2.0 * 2f64.sqrt()]).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-14);
        assert_eq!(dual_height(1.0, &[0.0], &[0.0]).unwrap(), vec![0.0]);
        let h = dual_height(1.0, &[-1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((h[0] - h[1]).abs() < 1e-14);
        let cfg = ProbeConfig::new(1.0, vec![-1.0, 1.0], h).unwrap();
        let g = rate_gradient(&cfg).unwrap();
        assert!(max_residual(&g, &[1.0, 1.0]) < 1e-12);
    }

    #[test]
    fn mass_validation() {
        assert!(matches!(
            lyapunov_from_duality(1.0, &[0.0], &[-1.0]),
            Err(Error::Domain(_))
        ));
        assert!(dual_height(1.0, &[0.0, 1.0], &[1.0]).is_err());
        assert!(dual_height(0.0, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn newton_agrees_with_structured_solve() {
        let cases: [(&[f64], &[f64]); 4] = [
            (&[0.0], &[1.5]),
            (&[-1.0, 1.0], &[1.0, 2.0]),
            (&[-2.0, -0.5, 1.0], &[0.7, 1.1, 0.4]),
            (&[-3.0, 3.0], &[0.1, 0.2]),
        ];
        for (xs, ms) in cases {
            let a = dual_height(1.0, xs, ms).unwrap();
            let b = dual_height_newton(1.0, xs, ms).unwrap();
            assert!(max_residual(&a, &b) < 1e-8, "{xs:?} {ms:?}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn zero_mass_probe_sits_on_envelope() {
        let h = dual_height(1.0, &[-1.0, 1.0], &[0.0, 2.0]).unwrap();
        let cfg = ProbeConfig::new(1.0, vec![-1.0, 1.0], h).unwrap();
        let g = rate_gradient(&cfg).unwrap();
        assert!(g[0].abs() < 1e-12);
        assert!((g[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tree_check_single_probe() {
        let cfg = ProbeConfig::new(1.0, vec![0.0], vec![1.0]).unwrap();
        let check = tree_decomposition_check(&cfg, 0.5).unwrap();
        assert!((check.lhs - check.rhs).abs() < 1e-12);
        assert_eq!(check.split.branches, vec![vec![0]]);
        assert!(check.intermediate_residual < 1e-10);
        let report = check.report();
        assert!(report["clusters"].as_array().unwrap().len() == 1);
    }

    #[test]
    fn scan_validation() {
        assert!(symmetry_breaking_scan(0.0, 5).is_err());
        assert!(symmetry_breaking_scan(1.0, 2).is_err());
    }

    #[test]
    fn scan_endpoints() {
        let scan = symmetry_breaking_scan(2.0, 5).unwrap();
        assert!((scan.points[0].l + 2.0 / 3.0).abs() < 1e-12);
        assert!((scan.points[4].l + 2.0 / 3.0).abs() < 1e-12);
        assert!(scan.points[2].l < -2.0 / 3.0);
        assert_eq!(scan.maximizers(), vec![0, 4]);
        assert!(scan.to_csv().starts_with("m_minus,L\n"));
    }
}
