//! Spacetime limit shape.
//!
//! The shape `psi` on `(0, T] x R` is the entropy solution of the backward
//! integrated Burgers equation with the terminal profile as data at `T`. It is
//! realised through the inf-convolution
//! `psi(t,x) = inf_y [ f(y) + (y - x)^2 / (2 (T - t)) ]`, which outside the
//! cones is the parabola and inside is affine between shocks.

mod corridor;
mod tree;

pub use corridor::{evaluate_m, Atom, CorridorEnsemble};
pub use tree::{
    build_shock_tree, cones_of, corridor_masses, Cluster, Cone, MergeEvent, ShockSegment,
    ShockTree,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{build_profile, classify_with, parab, Piece, ProbeConfig, TerminalProfile};

const SHOCK_RTOL: f64 = 1e-12;

/// Terminal profile, shock tree and cones of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitShape {
    config: ProbeConfig,
    profile: TerminalProfile,
    tree: ShockTree,
}

/// Which part of the shape governs a spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Parabola,
    Linear { piece: usize },
    Shock { left_piece: usize, right_piece: usize },
}

/// Characteristic through a point: its foot at the terminal time and the
/// constant spatial slope carried along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    pub foot: f64,
    pub slope: f64,
}

impl LimitShape {
    pub fn build(cfg: &ProbeConfig) -> Result<Self> {
        let profile = build_profile(cfg);
        let class = classify_with(cfg, &profile);
        if !class.is_concave() {
            return Err(Error::Domain(format!(
                "limit shape needs a concave configuration, got {class:?}"
            )));
        }
        let tree = tree::track(cfg, &profile);
        Ok(Self {
            config: cfg.clone(),
            profile,
            tree,
        })
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.config
    }

    pub fn profile(&self) -> &TerminalProfile {
        &self.profile
    }

    pub fn tree(&self) -> &ShockTree {
        &self.tree
    }

    pub fn cones(&self) -> &[Cone] {
        &self.tree.cones
    }

    /// Terminal time of the shape.
    pub fn horizon(&self) -> f64 {
        self.profile.t()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t <= self.horizon()) {
            return Err(Error::Domain(format!(
                "time must lie in (0, {}], got {t}",
                self.horizon()
            )));
        }
        Ok(())
    }

    pub fn in_cones(&self, t: f64, x: f64) -> bool {
        self.cones().iter().any(|c| c.contains(t, x))
    }

    /// Locates `(t,x)` among the affine regions using the shock positions at
    /// backward time `T - t`.
    pub fn region(&self, t: f64, x: f64) -> Result<Region> {
        self.check_time(t)?;
        let s = self.horizon() - t;
        let Some(cone) = self.cones().iter().find(|c| c.contains(t, x)) else {
            return Ok(Region::Parabola);
        };
        let shocks: Vec<&ShockSegment> = self
            .tree
            .active_at(s)
            .into_iter()
            .filter(|seg| seg.leaves.iter().all(|c| cone.block.contains(c)))
            .collect();
        let Some(first) = shocks.first() else {
            return Ok(Region::Parabola);
        };
        let scale = 1.0 + x.abs();
        for seg in &shocks {
            if (x - seg.position(s)).abs() <= SHOCK_RTOL * scale && seg.left_piece != seg.right_piece
            {
                return Ok(Region::Shock {
                    left_piece: seg.left_piece,
                    right_piece: seg.right_piece,
                });
            }
        }
        let piece = match shocks.iter().rposition(|seg| seg.position(s) <= x) {
            None => first.left_piece,
            Some(k) => shocks[k].right_piece,
        };
        Ok(self.piece_region(piece))
    }

    fn piece_region(&self, piece: usize) -> Region {
        if self.profile.pieces()[piece].is_linear() {
            Region::Linear { piece }
        } else {
            Region::Parabola
        }
    }

    /// Value on the affine continuation of straight piece `piece` at `(t,x)`.
    fn transported(&self, piece: usize, t: f64, x: f64) -> f64 {
        let s = self.horizon() - t;
        match self.profile.pieces()[piece] {
            Piece::Linear {
                slope, intercept, ..
            } => intercept + slope * x - 0.5 * slope * slope * s,
            Piece::Parabola { .. } => parab(t, x),
        }
    }

    /// `psi(t,x)` by front tracking: parabola outside the cones, otherwise the
    /// affine region selected by the shocks.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        Ok(match self.region(t, x)? {
            Region::Parabola => parab(t, x),
            Region::Linear { piece } => self.transported(piece, t, x),
            Region::Shock {
                left_piece,
                right_piece,
            } => self
                .transported(left_piece, t, x)
                .min(self.transported(right_piece, t, x)),
        })
    }

    /// `psi(t,x)` as the lower envelope of transported supporting lines of
    /// the terminal profile. Independent of the shock tree.
    pub fn eval_supporting_lines(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        let horizon = self.horizon();
        let s = horizon - t;
        let value = self
            .profile
            .pieces()
            .iter()
            .map(|p| match *p {
                Piece::Linear {
                    slope, intercept, ..
                } => intercept + slope * x - 0.5 * slope * slope * s,
                Piece::Parabola { a, b } => {
                    // tangent lines at y in [a, b] have slopes in [-b/T, -a/T]
                    let slope = (-x / t).clamp(-b / horizon, -a / horizon);
                    0.5 * slope * slope * t + slope * x
                }
            })
            .fold(f64::INFINITY, f64::min);
        Ok(value)
    }

    pub fn characteristic_through(&self, t: f64, x: f64) -> Result<Characteristic> {
        let s = self.horizon() - t;
        let slope_of = |piece: usize| match self.profile.pieces()[piece] {
            Piece::Linear { slope, .. } => slope,
            Piece::Parabola { .. } => -x / t,
        };
        match self.region(t, x)? {
            Region::Parabola => Ok(Characteristic {
                foot: x * self.horizon() / t,
                slope: -x / t,
            }),
            Region::Linear { piece } => {
                let slope = slope_of(piece);
                Ok(Characteristic {
                    foot: x - slope * s,
                    slope,
                })
            }
            Region::Shock {
                left_piece,
                right_piece,
            } => Err(Error::Ambiguous {
                t,
                x,
                left_foot: x - slope_of(left_piece) * s,
                right_foot: x - slope_of(right_piece) * s,
            }),
        }
    }
}

/// Front-tracked `psi(t,x)`.
pub fn shape_eval(shape: &LimitShape, t: f64, x: f64) -> Result<f64> {
    shape.eval(t, x)
}

pub fn characteristic_through(shape: &LimitShape, t: f64, x: f64) -> Result<Characteristic> {
    shape.characteristic_through(t, x)
}

/// Brute-force inf-convolution of a terminal profile over a uniform grid.
#[derive(Debug, Clone)]
pub struct HopfLaxOracle<'a> {
    profile: &'a TerminalProfile,
    /// Every finite piece boundary; a cheap set of trial points for bounding
    /// the search window.
    breakpoints: Vec<f64>,
}

impl<'a> HopfLaxOracle<'a> {
    pub fn new(profile: &'a TerminalProfile) -> Self {
        let breakpoints = profile
            .pieces()
            .iter()
            .flat_map(|p| [p.a(), p.b()])
            .filter(|y| y.is_finite())
            .collect();
        Self {
            profile,
            breakpoints,
        }
    }

    /// `min_k f(y_k) + (y_k - x)^2 / (2 (T - t))` over `y_k = k * grid_step`.
    ///
    /// The grid is restricted to the window where the objective can still
    /// beat a trial value, using `f >= parabola`; the window is exact, not a
    /// heuristic, so the result is the full-grid minimum.
    pub fn eval(&self, t: f64, x: f64, grid_step: f64) -> Result<f64> {
        let horizon = self.profile.t();
        if !(t > 0.0 && t < horizon) {
            return Err(Error::Domain(format!(
                "oracle needs t in (0, {horizon}), got {t}"
            )));
        }
        if !(grid_step > 0.0) {
            return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
        }
        let s = horizon - t;
        let objective = |y: f64| self.profile.eval(y) + (y - x) * (y - x) / (2.0 * s);
        let upper = self
            .breakpoints
            .iter()
            .copied()
            .chain([x * horizon / t, x])
            .map(objective)
            .fold(f64::INFINITY, f64::min);
        // parabola(T, y) + (y - x)^2/(2s) <= upper  <=>  q y^2 + l y + c <= 0
        let q = t / (2.0 * s * horizon);
        let l = -x / s;
        let c = x * x / (2.0 * s) - upper;
        let disc = (l * l - 4.0 * q * c).max(0.0).sqrt();
        let lo = (-l - disc) / (2.0 * q) - grid_step;
        let hi = (-l + disc) / (2.0 * q) + grid_step;

        let k0 = (lo / grid_step).ceil() as i64;
        let k1 = (hi / grid_step).floor() as i64;
        let pieces = self.profile.pieces();
        let mut i = self.profile.locate(k0 as f64 * grid_step);
        let mut best = f64::INFINITY;
        for k in k0..=k1 {
            let y = k as f64 * grid_step;
            while pieces[i].b() < y {
                i += 1;
            }
            let value = pieces[i].value(horizon, y) + (y - x) * (y - x) / (2.0 * s);
            best = best.min(value);
        }
        Ok(best)
    }
}

pub fn shape_eval_oracle(profile: &TerminalProfile, t: f64, x: f64, grid_step: f64) -> Result<f64> {
    HopfLaxOracle::new(profile).eval(t, x, grid_step)
}
