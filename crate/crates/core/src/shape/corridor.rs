//! The moment functional over finitely many weighted corridors.
//!
//! An ensemble is a finite set of atoms, each following a piecewise-affine
//! path in backward time. On every stretch where the cluster structure is
//! constant the functional integrates, per unit time, the cubic gain
//! `m^3/24` of each cluster minus the kinetic cost `½ m v^2` of each atom.

use serde::{Deserialize, Serialize};

use super::tree::ShockTree;
use crate::error::{Error, Result};

const POSITION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub mass: f64,
    /// Breakpoints `(s, x)` with strictly increasing `s`.
    pub path: Vec<(f64, f64)>,
}

impl Atom {
    pub fn position(&self, s: f64) -> f64 {
        let k = self.path.partition_point(|&(u, _)| u <= s);
        let k = k.clamp(1, self.path.len() - 1);
        let (s0, x0) = self.path[k - 1];
        let (s1, x1) = self.path[k];
        x0 + (x1 - x0) * (s - s0) / (s1 - s0)
    }

    /// Velocity on the affine stretch containing `s` (taken from the right).
    pub fn velocity(&self, s: f64) -> f64 {
        let k = self.path.partition_point(|&(u, _)| u <= s);
        let k = k.clamp(1, self.path.len() - 1);
        let (s0, x0) = self.path[k - 1];
        let (s1, x1) = self.path[k];
        (x1 - x0) / (s1 - s0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorEnsemble {
    atoms: Vec<Atom>,
}

impl CorridorEnsemble {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::MalformedEnsemble("no atoms".into()));
        }
        let (start, end) = (atoms[0].path.first().map(|p| p.0), atoms[0].path.last().map(|p| p.0));
        for (i, atom) in atoms.iter().enumerate() {
            if !(atom.mass > 0.0) {
                return Err(Error::MalformedEnsemble(format!("atom {i} has mass {}", atom.mass)));
            }
            if atom.path.len() < 2 {
                return Err(Error::MalformedEnsemble(format!("atom {i} needs two breakpoints")));
            }
            if atom.path.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                return Err(Error::MalformedEnsemble(format!(
                    "atom {i} breakpoints are not increasing in time"
                )));
            }
            if atom.path.first().map(|p| p.0) != start || atom.path.last().map(|p| p.0) != end {
                return Err(Error::MalformedEnsemble(format!(
                    "atom {i} is defined on a different time interval"
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// One atom per probe with positive mass, following its shock down the
    /// tree. Masses are read from the leaf segments.
    pub fn from_tree(tree: &ShockTree) -> Result<Self> {
        let atoms = (0..tree.leaves.len())
            .filter(|&c| tree.segments[tree.leaves[c]].mass > 0.0)
            .map(|c| {
                let path_ids = tree.path_of(c);
                let first = &tree.segments[path_ids[0]];
                let mut path = vec![(first.s0, first.position(first.s0))];
                for id in path_ids {
                    let seg = &tree.segments[id];
                    if seg.s1 > seg.s0 {
                        path.push((seg.s1, seg.position(seg.s1)));
                    }
                }
                Atom {
                    mass: first.mass,
                    path,
                }
            })
            .collect();
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn domain(&self) -> (f64, f64) {
        let p = &self.atoms[0].path;
        (p[0].0, p[p.len() - 1].0)
    }
}

/// Moment functional of the ensemble over `[s_from, s_to]`.
pub fn evaluate_m(ens: &CorridorEnsemble, s_from: f64, s_to: f64) -> Result<f64> {
    let (lo, hi) = ens.domain();
    if !(s_from < s_to) || s_from < lo || s_to > hi {
        return Err(Error::Domain(format!(
            "interval [{s_from}, {s_to}] is not inside the ensemble domain [{lo}, {hi}]"
        )));
    }
    let mut times: Vec<f64> = ens
        .atoms
        .iter()
        .flat_map(|a| a.path.iter().map(|p| p.0))
        .filter(|&s| s > s_from && s < s_to)
        .chain([s_from, s_to])
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut total = 0.0;
    let mut order: Vec<usize> = (0..ens.atoms.len()).collect();
    for w in times.windows(2) {
        let (u, v) = (w[0], w[1]);
        let mid = 0.5 * (u + v);
        let pos: Vec<f64> = ens.atoms.iter().map(|a| a.position(mid)).collect();
        let vel: Vec<f64> = ens.atoms.iter().map(|a| a.velocity(mid)).collect();
        order.sort_by(|&i, &j| pos[i].total_cmp(&pos[j]));

        let mut gain = 0.0;
        let mut k = 0;
        while k < order.len() {
            let lead = order[k];
            let mut mass = ens.atoms[lead].mass;
            let mut j = k + 1;
            while j < order.len()
                && (pos[order[j]] - pos[lead]).abs() <= POSITION_RTOL * (1.0 + pos[lead].abs())
            {
                let other = order[j];
                if (vel[other] - vel[lead]).abs() > 1e-7 * (1.0 + vel[lead].abs()) {
                    return Err(Error::MalformedEnsemble(format!(
                        "atoms {lead} and {other} overlap at s={mid} with velocities {} and {}",
                        vel[lead], vel[other]
                    )));
                }
                mass += ens.atoms[other].mass;
                j += 1;
            }
            gain += mass * mass * mass / 24.0;
            k = j;
        }
        let kinetic: f64 = ens
            .atoms
            .iter()
            .zip(&vel)
            .map(|(a, v)| 0.5 * a.mass * v * v)
            .sum();
        total += (v - u) * (gain - kinetic);
    }
    Ok(total)
}
