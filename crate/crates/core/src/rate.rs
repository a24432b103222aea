//! Closed-form rate function and its gradient in the heights.
//!
//! The rate is `∫ ½ f'(x)^2 - ½ (x/t)^2 dx` over the concave envelope `f`.
//! Arcs of the parabola contribute nothing, so the integral reduces to a sum
//! of cubic antiderivatives over the straight pieces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{build_profile, classify_with, reduce_with, MembershipClass, Piece, ProbeConfig, TerminalProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceContribution {
    pub piece: usize,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub reduced_set: Vec<usize>,
    pub per_piece: Vec<PieceContribution>,
}

/// `∫_a^b ½ p^2 - x^2/(2 t^2) dx`, factored to avoid cancellation in `b^3 - a^3`.
pub(crate) fn linear_piece_integral(t: f64, a: f64, b: f64, slope: f64) -> f64 {
    (b - a) * (0.5 * slope * slope - (a * a + a * b + b * b) / (6.0 * t * t))
}

pub(crate) fn profile_rate(profile: &TerminalProfile) -> (f64, Vec<PieceContribution>) {
    let t = profile.t();
    let per_piece: Vec<PieceContribution> = profile
        .pieces()
        .iter()
        .enumerate()
        .filter_map(|(piece, p)| match *p {
            Piece::Linear { a, b, slope, .. } => Some(PieceContribution {
                piece,
                contribution: linear_piece_integral(t, a, b, slope),
            }),
            Piece::Parabola { .. } => None,
        })
        .collect();
    let value = per_piece.iter().map(|c| c.contribution).sum();
    (value, per_piece)
}

/// Corner angle `f'(x-) - f'(x+)` of the envelope at each probe on it; zero
/// for probes strictly below the envelope.
fn corner_angles(cfg: &ProbeConfig, profile: &TerminalProfile, reduced: &[usize]) -> Vec<f64> {
    let mut gradient = vec![0.0; cfg.n()];
    for &c in reduced {
        let x = cfg.xs()[c];
        gradient[c] = (profile.slope_left(x) - profile.slope_right(x)).max(0.0);
    }
    gradient
}

/// Rate function of the concave-hull extension, with its gradient.
pub fn rate(cfg: &ProbeConfig) -> RateResult {
    let profile = build_profile(cfg);
    let reduced_set = reduce_with(cfg, &profile);
    let (value, per_piece) = profile_rate(&profile);
    RateResult {
        value,
        gradient: corner_angles(cfg, &profile, &reduced_set),
        reduced_set,
        per_piece,
    }
}

/// Gradient of the rate in the heights: the corner angle of the envelope at
/// each probe. Heights below the parabola are rejected.
pub fn rate_gradient(cfg: &ProbeConfig) -> Result<Vec<f64>> {
    let profile = build_profile(cfg);
    if classify_with(cfg, &profile) == MembershipClass::OutsideH {
        return Err(Error::Domain(
            "rate gradient is defined only for heights on or above the parabola".into(),
        ));
    }
    let reduced = reduce_with(cfg, &profile);
    Ok(corner_angles(cfg, &profile, &reduced))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: f64, xs: &[f64], hs: &[f64]) -> ProbeConfig {
        ProbeConfig::new(t, xs.to_vec(), hs.to_vec()).unwrap()
    }

    #[test]
    fn one_point_values() {
        let r = rate(&cfg(1.0, &[0.0], &[1.0]));
        assert!((r.value - 4.0 * 2f64.sqrt() / 3.0).abs() < 1e-14);
        assert_eq!(r.per_piece.len(), 2);
        assert_eq!(rate(&cfg(1.0, &[0.0], &[0.0])).value, 0.0);
        assert!((rate(&cfg(0.5, &[0.0], &[1.0])).value - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_examples() {
        let g = rate_gradient(&cfg(1.0, &[0.0], &[1.0])).unwrap();
        assert!((g[0] - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(rate_gradient(&cfg(1.0, &[0.0], &[0.0])).unwrap(), vec![0.0]);
        let g = rate_gradient(&cfg(1.0, &[-1.0, 1.0], &[0.5, 0.5])).unwrap();
        assert_eq!(g[0], g[1]);
        assert!(g[0] > 0.0);
        assert!(matches!(
            rate_gradient(&cfg(1.0, &[0.0], &[-1.0])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn off_hull_probes_have_zero_gradient() {
        let c = cfg(1.0, &[-1.0, 0.0, 1.0], &[0.2, 0.05, 0.2]);
        let r = rate(&c);
        assert_eq!(r.reduced_set, vec![0, 2]);
        assert_eq!(r.gradient[1], 0.0);
        let reduced = rate(&c.restrict(&r.reduced_set).unwrap());
        assert_eq!(r.value, reduced.value);
    }

    #[test]
    fn rate_result_json_fields() {
        let r = rate(&cfg(1.0, &[0.0], &[1.0]));
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["value", "gradient", "reduced_set", "per_piece"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
