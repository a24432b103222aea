//! Front tracking of shocks in backward time.
//!
//! Every corner of the terminal profile starts a shock. Between shocks the
//! limit shape is affine, so each shock moves on a straight line with the
//! Rankine-Hugoniot speed (average of the two side slopes). When neighbours
//! collide they merge into one shock carrying the outermost side slopes.
//! Nothing ever branches, and every surviving shock reaches the origin at the
//! end of backward time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::EVENT_TOL;
use crate::profile::{build_profile, classify_with, ProbeConfig, TerminalProfile};

/// A straight stretch of one shock: `position(s) = a + v s` on `[s0, s1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockSegment {
    pub id: usize,
    pub s0: f64,
    pub s1: f64,
    pub a: f64,
    pub v: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    /// Index of the profile piece whose slope lives on the left side.
    pub left_piece: usize,
    pub right_piece: usize,
    pub mass: f64,
    /// Probe indices whose shocks have merged into this segment.
    pub leaves: Vec<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

impl ShockSegment {
    #[inline]
    pub fn position(&self, s: f64) -> f64 {
        self.a + self.v * s
    }

    pub fn contains_time(&self, s: f64) -> bool {
        self.s0 <= s && s <= self.s1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub s: f64,
    pub x: f64,
    pub survivor: usize,
    pub absorbed: Vec<usize>,
}

/// Region `{ v_left t <= x <= v_right t }` enclosing one merge cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub v_left: f64,
    pub v_right: f64,
    pub block: Vec<usize>,
}

impl Cone {
    pub fn contains(&self, t: f64, x: f64) -> bool {
        self.v_left * t <= x && x <= self.v_right * t
    }
}

/// One group of shocks sharing a position at a given backward time.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub position: f64,
    pub segment: usize,
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockTree {
    /// Length of backward time; shocks end at the origin at `s = horizon`.
    pub horizon: f64,
    pub segments: Vec<ShockSegment>,
    pub events: Vec<MergeEvent>,
    pub cones: Vec<Cone>,
    /// Leaf segment of each probe index.
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Collision {
    s: f64,
    left: usize,
    right: usize,
}

impl PartialEq for Collision {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Collision {}

impl PartialOrd for Collision {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Collision {
    // Reversed so that the max-heap pops the earliest collision.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .s
            .total_cmp(&self.s)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

fn collision_time(l: &ShockSegment, r: &ShockSegment) -> Option<f64> {
    (l.v > r.v).then(|| (r.a - l.a) / (l.v - r.v))
}

/// Piece indices on either side of `x`.
fn side_pieces(profile: &TerminalProfile, x: f64) -> (usize, usize) {
    let i = profile.locate(x);
    let p = &profile.pieces()[i];
    if p.b() == x && p.a() < x && i + 1 < profile.pieces().len() {
        (i, i + 1)
    } else {
        (i, i)
    }
}

struct Tracker<'a> {
    profile: &'a TerminalProfile,
    segments: Vec<ShockSegment>,
    events: Vec<MergeEvent>,
    active: Vec<usize>,
    heap: BinaryHeap<Collision>,
    tol: f64,
}

impl<'a> Tracker<'a> {
    fn push_pair(&mut self, k: usize, now: f64) {
        let (l, r) = (self.active[k], self.active[k + 1]);
        if let Some(s) = collision_time(&self.segments[l], &self.segments[r]) {
            if s >= now - self.tol {
                self.heap.push(Collision {
                    s: s.max(now),
                    left: l,
                    right: r,
                });
            }
        }
    }

    fn adjacent(&self, l: usize, r: usize) -> Option<usize> {
        let k = self.active.iter().position(|&id| id == l)?;
        (self.active.get(k + 1) == Some(&r)).then_some(k)
    }

    /// Merges the run `active[lo..=hi]` at time `s`.
    fn merge_run(&mut self, lo: usize, hi: usize, s: f64) -> usize {
        let ids: Vec<usize> = self.active[lo..=hi].to_vec();
        let x = ids
            .iter()
            .map(|&id| self.segments[id].position(s))
            .sum::<f64>()
            / ids.len() as f64;
        let first = &self.segments[ids[0]];
        let last = &self.segments[*ids.last().unwrap()];
        let (left_slope, left_piece) = (first.left_slope, first.left_piece);
        let (right_slope, right_piece) = (last.right_slope, last.right_piece);
        let v = 0.5 * (left_slope + right_slope);
        let id = self.segments.len();
        let mut leaves: Vec<usize> = ids
            .iter()
            .flat_map(|&c| self.segments[c].leaves.iter().copied())
            .collect();
        leaves.sort_unstable();
        let mass = ids.iter().map(|&c| self.segments[c].mass).sum();
        for &c in &ids {
            self.segments[c].s1 = s;
            self.segments[c].parent = Some(id);
        }
        self.segments.push(ShockSegment {
            id,
            s0: s,
            s1: self.profile.t(),
            a: x - v * s,
            v,
            left_slope,
            right_slope,
            left_piece,
            right_piece,
            mass,
            leaves,
            children: ids.clone(),
            parent: None,
        });
        self.events.push(MergeEvent {
            s,
            x,
            survivor: id,
            absorbed: ids,
        });
        self.active.splice(lo..=hi, [id]);
        lo
    }

    fn run(&mut self) {
        let horizon = self.profile.t();
        while let Some(ev) = self.heap.pop() {
            if ev.s >= horizon - self.tol {
                break;
            }
            if self.adjacent(ev.left, ev.right).is_none() {
                continue;
            }
            let s = ev.s;
            // Collect every adjacent pair colliding at (numerically) the same time.
            let mut runs: Vec<(usize, usize)> = Vec::new();
            let mut k = 0;
            while k + 1 < self.active.len() {
                let hits = |k: usize| {
                    let (l, r) = (&self.segments[self.active[k]], &self.segments[self.active[k + 1]]);
                    collision_time(l, r).is_some_and(|c| (c - s).abs() <= self.tol)
                };
                if hits(k) {
                    let lo = k;
                    while k + 1 < self.active.len() && hits(k) {
                        k += 1;
                    }
                    runs.push((lo, k));
                } else {
                    k += 1;
                }
            }
            for &(lo, hi) in runs.iter().rev() {
                let at = self.merge_run(lo, hi, s);
                if at > 0 {
                    self.push_pair(at - 1, s);
                }
                if at + 1 < self.active.len() {
                    self.push_pair(at, s);
                }
            }
        }
        for &id in &self.active {
            self.segments[id].s1 = horizon;
        }
    }
}

/// Front-tracks the shocks of the limit shape for a concave configuration.
pub fn build_shock_tree(cfg: &ProbeConfig) -> Result<ShockTree> {
    let profile = build_profile(cfg);
    let class = classify_with(cfg, &profile);
    if !class.is_concave() {
        return Err(Error::Domain(format!(
            "shock tree needs a concave configuration, got {class:?}"
        )));
    }
    Ok(track(cfg, &profile))
}

pub(crate) fn track(cfg: &ProbeConfig, profile: &TerminalProfile) -> ShockTree {
    let horizon = profile.t();
    let mut segments = Vec::with_capacity(2 * cfg.n());
    for (c, &x) in cfg.xs().iter().enumerate() {
        let (lp, rp) = side_pieces(profile, x);
        let left_slope = profile.pieces()[lp].slope(horizon, x);
        let right_slope = profile.pieces()[rp].slope(horizon, x);
        segments.push(ShockSegment {
            id: c,
            s0: 0.0,
            s1: horizon,
            a: x,
            v: 0.5 * (left_slope + right_slope),
            left_slope,
            right_slope,
            left_piece: lp,
            right_piece: rp,
            mass: (left_slope - right_slope).max(0.0),
            leaves: vec![c],
            children: Vec::new(),
            parent: None,
        });
    }
    let mut tracker = Tracker {
        profile,
        active: (0..segments.len()).collect(),
        segments,
        events: Vec::new(),
        heap: BinaryHeap::new(),
        tol: EVENT_TOL * horizon.max(1.0),
    };
    for k in 0..tracker.active.len().saturating_sub(1) {
        tracker.push_pair(k, 0.0);
    }
    tracker.run();
    let Tracker {
        segments,
        events,
        active,
        ..
    } = tracker;
    let cones = active
        .iter()
        .map(|&id| {
            let seg = &segments[id];
            Cone {
                v_left: -seg.left_slope,
                v_right: -seg.right_slope,
                block: seg.leaves.clone(),
            }
        })
        .collect();
    ShockTree {
        horizon,
        segments,
        events,
        cones,
        leaves: (0..cfg.n()).collect(),
    }
}

impl ShockTree {
    /// Segments alive at backward time `s`. At a merge time the merged
    /// segment is reported, not its children.
    pub fn active_at(&self, s: f64) -> Vec<&ShockSegment> {
        let mut out: Vec<&ShockSegment> = self
            .segments
            .iter()
            .filter(|seg| seg.s0 <= s && (s < seg.s1 || (seg.s1 >= self.horizon && s <= seg.s1)))
            .collect();
        out.sort_by(|p, q| p.position(s).total_cmp(&q.position(s)).then(p.id.cmp(&q.id)));
        out
    }

    pub fn clusters_at(&self, s: f64) -> Vec<Cluster> {
        self.active_at(s)
            .into_iter()
            .map(|seg| Cluster {
                position: seg.position(s),
                segment: seg.id,
                leaves: seg.leaves.clone(),
            })
            .collect()
    }

    /// Segment ids visited by the shock starting at probe `c`, leaf first.
    pub fn path_of(&self, c: usize) -> Vec<usize> {
        let mut path = vec![self.leaves[c]];
        while let Some(p) = self.segments[*path.last().unwrap()].parent {
            path.push(p);
        }
        path
    }

    /// First backward time at which the shocks from probes `c` and `d` share
    /// a segment, if that happens before the horizon.
    pub fn merge_time(&self, c: usize, d: usize) -> Option<f64> {
        let pc = self.path_of(c);
        self.path_of(d)
            .into_iter()
            .find(|id| pc.contains(id))
            .map(|id| self.segments[id].s0)
    }

    /// Probe indices grouped by the shock they end up in.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.cones.iter().map(|c| c.block.clone()).collect()
    }

    /// The same tree with every segment carrying the sum of the given leaf
    /// masses above it.
    pub fn with_masses(&self, masses: &[f64]) -> Result<ShockTree> {
        if masses.len() != self.leaves.len() {
            return Err(Error::Domain(format!(
                "expected {} masses, got {}",
                self.leaves.len(),
                masses.len()
            )));
        }
        let mut tree = self.clone();
        for seg in &mut tree.segments {
            seg.mass = seg.leaves.iter().map(|&c| masses[c]).sum();
        }
        Ok(tree)
    }
}

/// Cones of a tree: one per cluster of shocks that merge before the horizon.
pub fn cones_of(tree: &ShockTree) -> Vec<Cone> {
    tree.segments
        .iter()
        .filter(|seg| seg.parent.is_none())
        .map(|seg| Cone {
            v_left: -seg.left_slope,
            v_right: -seg.right_slope,
            block: seg.leaves.clone(),
        })
        .collect()
}

/// Annotates every segment with the sum of leaf masses above it.
pub fn corridor_masses(tree: &ShockTree, masses: &[f64]) -> Result<ShockTree> {
    tree.with_masses(masses)
}
