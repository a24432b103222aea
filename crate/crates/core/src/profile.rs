//! The parabola, terminal profiles and their concave-hull extension.
//!
//! A terminal profile is the least concave function lying above the parabola
//! `p(t,x) = -x^2/(2t)` and above every probe point `(x_c, h_c)`. It is
//! represented exactly as alternating parabola arcs and straight pieces:
//! tangent lines on the flanks of each cluster of probes, and chords between
//! consecutive supporting probes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{close, extended_real, HEIGHT_RTOL, SLOPE_RTOL};

/// Largest supported number of probe locations.
pub const MAX_PROBES: usize = 64;

/// `p(t,x) = -x^2/(2t)`.
pub fn parabola_eval(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("parabola needs t > 0, got {t}")));
    }
    Ok(parab(t, x))
}

#[inline]
pub(crate) fn parab(t: f64, x: f64) -> f64 {
    -x * x / (2.0 * t)
}

/// Time, strictly increasing probe locations, and target heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProbeConfig")]
pub struct ProbeConfig {
    t: f64,
    xs: Vec<f64>,
    hs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawProbeConfig {
    t: f64,
    xs: Vec<f64>,
    hs: Vec<f64>,
}

impl TryFrom<RawProbeConfig> for ProbeConfig {
    type Error = Error;

    fn try_from(raw: RawProbeConfig) -> Result<Self> {
        ProbeConfig::new(raw.t, raw.xs, raw.hs)
    }
}

impl ProbeConfig {
    pub fn new(t: f64, xs: Vec<f64>, hs: Vec<f64>) -> Result<Self> {
        validate_time(t)?;
        validate_locations(&xs)?;
        if hs.len() != xs.len() {
            return Err(Error::config(
                "hs",
                format!("expected {} heights, got {}", xs.len(), hs.len()),
            ));
        }
        if let Some(h) = hs.iter().find(|h| !h.is_finite()) {
            return Err(Error::config("hs", format!("non-finite height {h}")));
        }
        Ok(Self { t, xs, hs })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn hs(&self) -> &[f64] {
        &self.hs
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    /// Same locations and time, new heights.
    pub fn with_heights(&self, hs: Vec<f64>) -> Result<Self> {
        Self::new(self.t, self.xs.clone(), hs)
    }

    /// Restriction to a subset of probe indices (kept in order).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let xs = indices.iter().map(|&c| self.xs[c]).collect();
        let hs = indices.iter().map(|&c| self.hs[c]).collect();
        Self::new(self.t, xs, hs)
    }

    /// Height of the parabola under each probe.
    pub fn parabola_heights(&self) -> Vec<f64> {
        self.xs.iter().map(|&x| parab(self.t, x)).collect()
    }
}

pub(crate) fn validate_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::config("t", format!("time must lie in (0, 1], got {t}")));
    }
    Ok(())
}

pub(crate) fn validate_locations(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::config("xs", "at least one probe location is required"));
    }
    if xs.len() > MAX_PROBES {
        return Err(Error::config(
            "xs",
            format!("at most {MAX_PROBES} probes are supported, got {}", xs.len()),
        ));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::config("xs", format!("non-finite location {x}")));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("xs", "locations must be strictly increasing"));
    }
    Ok(())
}

/// One piece of a terminal profile on the closed interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Piece {
    Parabola {
        #[serde(with = "extended_real")]
        a: f64,
        #[serde(with = "extended_real")]
        b: f64,
    },
    Linear {
        a: f64,
        b: f64,
        slope: f64,
        intercept: f64,
    },
}

impl Piece {
    pub fn a(&self) -> f64 {
        match *self {
            Piece::Parabola { a, .. } | Piece::Linear { a, .. } => a,
        }
    }

    pub fn b(&self) -> f64 {
        match *self {
            Piece::Parabola { b, .. } | Piece::Linear { b, .. } => b,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Piece::Linear { .. })
    }

    #[inline]
    pub fn value(&self, t: f64, x: f64) -> f64 {
        match *self {
            Piece::Parabola { .. } => parab(t, x),
            Piece::Linear {
                slope, intercept, ..
            } => intercept + slope * x,
        }
    }

    #[inline]
    pub fn slope(&self, t: f64, x: f64) -> f64 {
        match *self {
            Piece::Parabola { .. } => -x / t,
            Piece::Linear { slope, .. } => slope,
        }
    }

    fn with_bounds(self, a: f64, b: f64) -> Piece {
        match self {
            Piece::Parabola { .. } => Piece::Parabola { a, b },
            Piece::Linear {
                slope, intercept, ..
            } => Piece::Linear {
                a,
                b,
                slope,
                intercept,
            },
        }
    }
}

/// Exact piecewise description of the concave envelope over the parabola.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalProfile {
    t: f64,
    pieces: Vec<Piece>,
    kinks: Vec<f64>,
}

impl TerminalProfile {
    /// The bare parabola at time `t`.
    pub fn parabola(t: f64) -> Self {
        Self {
            t,
            pieces: vec![Piece::Parabola {
                a: f64::NEG_INFINITY,
                b: f64::INFINITY,
            }],
            kinks: Vec::new(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Index of a piece whose closed interval contains `x`.
    pub fn locate(&self, x: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.b() < x);
        i.min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.locate(x)].value(self.t, x)
    }

    /// Derivative from the left at `x`.
    pub fn slope_left(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.b() < x);
        let i = if i < self.pieces.len() && self.pieces[i].a() < x {
            i
        } else {
            i.saturating_sub(1)
        };
        self.pieces[i].slope(self.t, x)
    }

    /// Derivative from the right at `x`.
    pub fn slope_right(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.b() <= x);
        self.pieces[i.min(self.pieces.len() - 1)].slope(self.t, x)
    }

    /// True when the profile is the bare parabola.
    pub fn is_parabola(&self) -> bool {
        self.pieces.iter().all(|p| !p.is_linear())
    }

    /// Smallest interval containing every straight piece, if any.
    pub fn linear_span(&self) -> Option<(f64, f64)> {
        let first = self.pieces.iter().find(|p| p.is_linear())?;
        let last = self.pieces.iter().rev().find(|p| p.is_linear())?;
        Some((first.a(), last.b()))
    }

    /// Checks the structural invariants: tiling of the real line, unbounded
    /// parabola ends, continuity, domination of the parabola and concavity.
    pub fn check_invariants(&self) -> Result<()> {
        let t = self.t;
        let first = self.pieces.first().ok_or_else(|| Error::Numeric("empty profile".into()))?;
        let last = self.pieces.last().unwrap();
        if first.a() != f64::NEG_INFINITY || last.b() != f64::INFINITY {
            return Err(Error::Numeric("profile does not cover the real line".into()));
        }
        if first.is_linear() || last.is_linear() {
            return Err(Error::Numeric("unbounded ends must be parabola arcs".into()));
        }
        for p in &self.pieces {
            if !(p.a() < p.b()) {
                return Err(Error::Numeric(format!("degenerate piece {p:?}")));
            }
        }
        for w in self.pieces.windows(2) {
            let x = w[0].b();
            if x != w[1].a() {
                return Err(Error::Numeric(format!("gap between pieces at {x}")));
            }
            let (l, r) = (w[0].value(t, x), w[1].value(t, x));
            if !close(l, r, 1e-12) {
                return Err(Error::Numeric(format!("discontinuity at {x}: {l} vs {r}")));
            }
            let (sl, sr) = (w[0].slope(t, x), w[1].slope(t, x));
            if sr > sl + SLOPE_RTOL * (1.0 + sl.abs()) {
                return Err(Error::Numeric(format!("convex kink at {x}: {sl} -> {sr}")));
            }
            if let Piece::Linear { a, b, .. } = w[0] {
                for y in [a, 0.5 * (a + b), b] {
                    if w[0].value(t, y) < parab(t, y) - HEIGHT_RTOL * (1.0 + y * y) {
                        return Err(Error::Numeric(format!("profile dips below parabola at {y}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Evaluates a profile at `x`.
pub fn profile_eval(profile: &TerminalProfile, x: f64) -> f64 {
    profile.eval(x)
}

/// Classification of a deviation vector relative to the deviation spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipClass {
    /// Some height lies strictly below the parabola.
    OutsideH,
    /// Concave configuration with at least one height on the parabola.
    OnBoundaryH,
    /// Concave configuration, all heights above the parabola, with a
    /// degenerate (zero-angle) corner somewhere.
    InHconc,
    /// Strictly concave, all heights strictly above the parabola.
    InHconcInterior,
    /// Above the parabola but some probe lies strictly under the hull.
    InHNotConc,
}

impl MembershipClass {
    pub fn is_concave(self) -> bool {
        matches!(
            self,
            MembershipClass::InHconc | MembershipClass::InHconcInterior | MembershipClass::OnBoundaryH
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    x: f64,
    h: f64,
}

/// `x^2 + 2 t h`, written as `2 t (h - p)`; zero for vertices on the parabola.
fn radicand(t: f64, v: &Vertex) -> f64 {
    let p = parab(t, v.x);
    let gap = v.h - p;
    if gap <= HEIGHT_RTOL * (1.0 + p.abs()) {
        0.0
    } else {
        2.0 * t * gap
    }
}

/// Tangency point on the parabola of the tangent from `v` going left.
fn tangency_left(t: f64, v: &Vertex) -> f64 {
    v.x - radicand(t, v).sqrt()
}

fn tangency_right(t: f64, v: &Vertex) -> f64 {
    v.x + radicand(t, v).sqrt()
}

/// Line tangent to the parabola at `a`, as `(slope, intercept)`.
fn tangent_line(t: f64, a: f64) -> (f64, f64) {
    (-a / t, a * a / (2.0 * t))
}

fn line_at((slope, intercept): (f64, f64), x: f64) -> f64 {
    intercept + slope * x
}

fn below(h: f64, envelope: f64) -> bool {
    h < envelope - HEIGHT_RTOL * (1.0 + envelope.abs())
}

/// Envelope of a single vertex and the parabola.
fn single_envelope(t: f64, v: &Vertex, x: f64) -> f64 {
    let base = parab(t, x);
    if below(v.h, parab(t, v.x)) {
        return base;
    }
    let a = if x <= v.x {
        tangency_left(t, v)
    } else {
        tangency_right(t, v)
    };
    if (x <= v.x && x >= a) || (x > v.x && x <= a) {
        line_at(tangent_line(t, a), x).max(base)
    } else {
        base
    }
}

/// Whether the chord from `l` to `r` stays on or above the parabola.
fn chord_above(t: f64, l: &Vertex, r: &Vertex) -> bool {
    let slope = (r.h - l.h) / (r.x - l.x);
    let y = -slope * t;
    if y <= l.x || y >= r.x {
        return true;
    }
    let chord = l.h + slope * (y - l.x);
    !below(chord, parab(t, y))
}

/// Envelope of two vertices and the parabola, evaluated at `x`.
fn pair_envelope(t: f64, l: &Vertex, r: &Vertex, x: f64) -> f64 {
    if below(l.h, single_envelope(t, r, l.x)) {
        return single_envelope(t, r, x);
    }
    if below(r.h, single_envelope(t, l, r.x)) {
        return single_envelope(t, l, x);
    }
    if x < l.x {
        return single_envelope(t, l, x);
    }
    if x > r.x {
        return single_envelope(t, r, x);
    }
    if chord_above(t, l, r) {
        let slope = (r.h - l.h) / (r.x - l.x);
        return l.h + slope * (x - l.x);
    }
    let ar = tangency_right(t, l);
    let al = tangency_left(t, r);
    let mut value = parab(t, x);
    if x <= ar {
        value = value.max(line_at(tangent_line(t, ar), x));
    }
    if x >= al {
        let right = line_at(tangent_line(t, al), x);
        value = if x <= ar { value.min(right) } else { value.max(right) };
    }
    value
}

/// Upper hull sweep. Returns the vertices of the envelope in order.
fn hull_vertices(cfg: &ProbeConfig) -> Vec<Vertex> {
    let t = cfg.t;
    let mut stack: Vec<Vertex> = Vec::with_capacity(cfg.n());
    for (&x, &h) in cfg.xs.iter().zip(&cfg.hs) {
        let r = Vertex { x, h };
        if below(h, parab(t, x)) {
            continue;
        }
        if let Some(top) = stack.last() {
            if below(h, single_envelope(t, top, x)) {
                continue;
            }
        }
        while let Some(&b) = stack.last() {
            let env = match stack.len().checked_sub(2).map(|i| stack[i]) {
                Some(a) => pair_envelope(t, &a, &r, b.x),
                None => single_envelope(t, &r, b.x),
            };
            if below(b.h, env) {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(r);
    }
    stack
}

fn push_piece(pieces: &mut Vec<Piece>, piece: Piece) {
    if piece.a() < piece.b() {
        pieces.push(piece);
    }
}

fn tangent_piece(t: f64, a: f64, b: f64, at: f64) -> Piece {
    let (slope, intercept) = tangent_line(t, at);
    Piece::Linear {
        a,
        b,
        slope,
        intercept,
    }
}

fn same_line(p: &Piece, q: &Piece) -> bool {
    match (p, q) {
        (Piece::Parabola { .. }, Piece::Parabola { .. }) => true,
        (Piece::Linear { slope: s1, .. }, Piece::Linear { slope: s2, .. }) => {
            close(*s1, *s2, SLOPE_RTOL)
        }
        _ => false,
    }
}

fn assemble(t: f64, hull: &[Vertex]) -> TerminalProfile {
    let (Some(first), Some(last)) = (hull.first(), hull.last()) else {
        return TerminalProfile::parabola(t);
    };
    let mut raw = Vec::with_capacity(3 * hull.len() + 2);
    let al = tangency_left(t, first);
    push_piece(
        &mut raw,
        Piece::Parabola {
            a: f64::NEG_INFINITY,
            b: al,
        },
    );
    push_piece(&mut raw, tangent_piece(t, al, first.x, al));
    for w in hull.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        if chord_above(t, l, r) {
            let slope = (r.h - l.h) / (r.x - l.x);
            push_piece(
                &mut raw,
                Piece::Linear {
                    a: l.x,
                    b: r.x,
                    slope,
                    intercept: l.h - slope * l.x,
                },
            );
        } else {
            let ar = tangency_right(t, l);
            let al = tangency_left(t, r);
            push_piece(&mut raw, tangent_piece(t, l.x, ar, ar));
            push_piece(&mut raw, Piece::Parabola { a: ar, b: al });
            push_piece(&mut raw, tangent_piece(t, al, r.x, al));
        }
    }
    let ar = tangency_right(t, last);
    push_piece(&mut raw, tangent_piece(t, last.x, ar, ar));
    push_piece(
        &mut raw,
        Piece::Parabola {
            a: ar,
            b: f64::INFINITY,
        },
    );

    // Collinear neighbours and adjacent arcs collapse into one piece.
    let mut pieces: Vec<Piece> = Vec::with_capacity(raw.len());
    for p in raw {
        match pieces.last_mut() {
            Some(prev) if same_line(prev, &p) => *prev = prev.with_bounds(prev.a(), p.b()),
            _ => pieces.push(p),
        }
    }
    let kinks = pieces
        .windows(2)
        .filter_map(|w| {
            let x = w[0].b();
            let (sl, sr) = (w[0].slope(t, x), w[1].slope(t, x));
            (sl - sr > SLOPE_RTOL * (1.0 + sl.abs().max(sr.abs()))).then_some(x)
        })
        .collect();
    TerminalProfile { t, pieces, kinks }
}

/// Builds the concave envelope of the parabola and the probe points. For
/// concave configurations this is the terminal profile itself.
pub fn build_profile(cfg: &ProbeConfig) -> TerminalProfile {
    assemble(cfg.t, &hull_vertices(cfg))
}

/// Indices of the probes that lie on the envelope (0-based).
pub fn reduce_indices(cfg: &ProbeConfig) -> Vec<usize> {
    let profile = build_profile(cfg);
    reduce_with(cfg, &profile)
}

pub(crate) fn reduce_with(cfg: &ProbeConfig, profile: &TerminalProfile) -> Vec<usize> {
    cfg.xs
        .iter()
        .zip(&cfg.hs)
        .enumerate()
        .filter(|(_, (&x, &h))| !below(h, profile.eval(x)))
        .map(|(c, _)| c)
        .collect()
}

pub fn classify(cfg: &ProbeConfig) -> MembershipClass {
    let profile = build_profile(cfg);
    classify_with(cfg, &profile)
}

pub(crate) fn classify_with(cfg: &ProbeConfig, profile: &TerminalProfile) -> MembershipClass {
    let t = cfg.t;
    let pairs = || cfg.xs.iter().copied().zip(cfg.hs.iter().copied());
    if pairs().any(|(x, h)| below(h, parab(t, x))) {
        return MembershipClass::OutsideH;
    }
    if reduce_with(cfg, profile).len() < cfg.n() {
        return MembershipClass::InHNotConc;
    }
    if pairs().any(|(x, h)| !below(parab(t, x), h)) {
        return MembershipClass::OnBoundaryH;
    }
    let all_kinks = cfg
        .xs
        .iter()
        .all(|x| profile.kinks.iter().any(|k| k == x));
    if all_kinks {
        MembershipClass::InHconcInterior
    } else {
        MembershipClass::InHconc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: f64, xs: &[f64], hs: &[f64]) -> ProbeConfig {
        ProbeConfig::new(t, xs.to_vec(), hs.to_vec()).unwrap()
    }

    #[test]
    fn parabola_values() {
        assert_eq!(parabola_eval(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(parabola_eval(1.0, 1.0).unwrap(), -0.5);
        assert_eq!(parabola_eval(0.5, 1.0).unwrap(), -1.0);
        assert!(matches!(parabola_eval(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(parabola_eval(-1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ProbeConfig::new(0.0, vec![0.0], vec![0.0]).is_err());
        assert!(ProbeConfig::new(1.5, vec![0.0], vec![0.0]).is_err());
        assert!(ProbeConfig::new(1.0, vec![], vec![]).is_err());
        assert!(ProbeConfig::new(1.0, vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(ProbeConfig::new(1.0, vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(ProbeConfig::new(1.0, (0..65).map(f64::from).collect(), vec![0.0; 65]).is_err());
        let err = ProbeConfig::new(1.0, vec![2.0, 1.0], vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "xs"));
    }

    #[test]
    fn single_point_profile() {
        let p = build_profile(&cfg(1.0, &[0.0], &[2.0]));
        assert_eq!(p.pieces().len(), 4);
        assert_eq!(
            p.pieces()[0],
            Piece::Parabola {
                a: f64::NEG_INFINITY,
                b: -2.0
            }
        );
        match p.pieces()[1] {
            Piece::Linear { a, b, slope, .. } => {
                assert_eq!((a, b), (-2.0, 0.0));
                assert!((slope - 2.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        match p.pieces()[2] {
            Piece::Linear { a, b, slope, .. } => {
                assert_eq!((a, b), (0.0, 2.0));
                assert!((slope + 2.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p.kinks(), &[0.0]);
        p.check_invariants().unwrap();

        assert!((profile_eval(&p, 0.0) - 2.0).abs() < 1e-15);
        assert_eq!(profile_eval(&p, 3.0), -4.5);
        assert!(profile_eval(&p, 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_below_parabola_contributes_nothing() {
        let c = cfg(1.0, &[0.0], &[-0.1]);
        let p = build_profile(&c);
        assert!(p.is_parabola());
        assert_eq!(p.pieces().len(), 1);
        assert!(reduce_indices(&c).is_empty());
        assert_eq!(classify(&c), MembershipClass::OutsideH);
    }

    #[test]
    fn symmetric_pair() {
        let p = build_profile(&cfg(1.0, &[-1.0, 1.0], &[0.5, 0.5]));
        p.check_invariants().unwrap();
        assert_eq!(p.kinks(), &[-1.0, 1.0]);
        let chord = p
            .pieces()
            .iter()
            .find(|q| q.a() == -1.0 && q.b() == 1.0)
            .expect("chord between the probes");
        assert!(matches!(chord, Piece::Linear { slope, .. } if *slope == 0.0));
        // Outer flanks touch the parabola at x = -1 - sqrt(2) and 1 + sqrt(2).
        let a = 1.0 + 2f64.sqrt();
        assert!((p.pieces()[0].b() + a).abs() < 1e-14);
        assert!((p.pieces()[4].a() - a).abs() < 1e-14);
    }

    #[test]
    fn reduced_index_examples() {
        assert_eq!(reduce_indices(&cfg(1.0, &[0.0], &[1.0])), vec![0]);
        assert!(reduce_indices(&cfg(1.0, &[0.0], &[-0.1])).is_empty());
        let c = cfg(1.0, &[-1.0, 0.0, 1.0], &[0.2, 0.05, 0.2]);
        assert_eq!(reduce_indices(&c), vec![0, 2]);
        assert_eq!(classify(&c), MembershipClass::InHNotConc);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify(&cfg(1.0, &[0.0], &[1.0])),
            MembershipClass::InHconcInterior
        );
        assert_eq!(classify(&cfg(1.0, &[0.0], &[0.0])), MembershipClass::OnBoundaryH);
        // middle probe exactly on the chord
        assert_eq!(
            classify(&cfg(1.0, &[-1.0, 0.0, 1.0], &[0.5, 0.5, 0.5])),
            MembershipClass::InHconc
        );
    }

    #[test]
    fn collinear_probe_is_kept_without_kink() {
        let c = cfg(1.0, &[-1.0, 0.0, 1.0], &[0.5, 0.5, 0.5]);
        let p = build_profile(&c);
        assert_eq!(reduce_indices(&c), vec![0, 1, 2]);
        assert_eq!(p.kinks(), &[-1.0, 1.0]);
        assert_eq!(p.pieces().len(), 5);
    }

    #[test]
    fn boundary_probe_on_parabola() {
        let c = cfg(1.0, &[0.0], &[0.0]);
        let p = build_profile(&c);
        assert!(p.is_parabola());
        assert_eq!(reduce_indices(&c), vec![0]);
    }

    #[test]
    fn one_sided_slopes() {
        let p = build_profile(&cfg(1.0, &[0.0], &[2.0]));
        assert!((p.slope_left(0.0) - 2.0).abs() < 1e-15);
        assert!((p.slope_right(0.0) + 2.0).abs() < 1e-15);
        assert!((p.slope_left(2.0) + 2.0).abs() < 1e-15);
        assert!((p.slope_right(2.0) + 2.0).abs() < 1e-15);
        assert_eq!(p.slope_right(5.0), -5.0);
    }

    #[test]
    fn dominated_neighbour_is_dropped() {
        // The tall centre probe shadows both small neighbours.
        let c = cfg(1.0, &[-0.5, 0.0, 0.5], &[-0.1, 3.0, -0.1]);
        assert_eq!(reduce_indices(&c), vec![1]);
        let p = build_profile(&c);
        assert_eq!(p.kinks(), &[0.0]);
    }

    #[test]
    fn separated_clusters_leave_parabola_between() {
        let c = cfg(1.0, &[-3.0, 3.0], &[-4.4, -4.4]);
        let p = build_profile(&c);
        p.check_invariants().unwrap();
        assert_eq!(p.pieces().len(), 7);
        assert!(matches!(p.pieces()[3], Piece::Parabola { .. }));
        assert_eq!(p.eval(0.0), 0.0);
    }

    #[test]
    fn json_uses_infinity_sentinels() {
        let p = build_profile(&cfg(1.0, &[0.0], &[2.0]));
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"-inf\""));
        assert!(json.contains("\"inf\""));
        assert!(json.contains("\"kind\":\"parabola\""));
        let back: TerminalProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn config_json_is_validated() {
        let bad = serde_json::from_str::<ProbeConfig>(r#"{"t":1,"xs":[1,0],"hs":[0,0]}"#);
        assert!(bad.is_err());
        let ok: ProbeConfig = serde_json::from_str(r#"{"t":1,"xs":[0],"hs":[1]}"#).unwrap();
        assert_eq!(ok.n(), 1);
    }
}
