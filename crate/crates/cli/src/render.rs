//! SVG figures of a limit shape: forward time runs upward, shocks are thick,
//! characteristics thin, cones shaded and probes marked.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kpzldp_core::LimitShape;

use crate::error::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const FAN: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl Window {
    pub fn new(t0: f64, t1: f64, x0: f64, x1: f64) -> Result<Self> {
        if ![t0, t1, x0, x1].iter().all(|v| v.is_finite()) {
            return Err(CliError::validation("window", "bounds must be finite"));
        }
        if !(t0 < t1) || !(x0 < x1) {
            return Err(CliError::validation(
                "window",
                format!("window t in [{t0}, {t1}], x in [{x0}, {x1}] is empty"),
            ));
        }
        if t0 < 0.0 {
            return Err(CliError::validation("window", "times must be nonnegative"));
        }
        Ok(Self { t0, t1, x0, x1 })
    }

    pub fn from_array([t0, t1, x0, x1]: [f64; 4]) -> Result<Self> {
        Self::new(t0, t1, x0, x1)
    }

    /// Parses `t0,t1,x0,x1`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::validation("window", format!("`{text}`: {e}")))?;
        let arr: [f64; 4] = parts
            .try_into()
            .map_err(|_| CliError::validation("window", format!("`{text}` needs four numbers t0,t1,x0,x1")))?;
        Self::from_array(arr)
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, t: f64) -> f64 {
        MARGIN + (self.t1 - t) / (self.t1 - self.t0) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Earliest time down to `t_lo` at which the characteristic with foot `y`
/// is still the one reaching `(t, x(t))`.
fn characteristic_start(shape: &LimitShape, y: f64, slope: f64, t_lo: f64) -> f64 {
    let horizon = shape.horizon();
    let at = |t: f64| y + slope * (horizon - t);
    let alive = |t: f64| match shape.characteristic_through(t, at(t)) {
        Ok(c) => (c.foot - y).abs() <= 1e-7 * (1.0 + y.abs()),
        Err(_) => false,
    };
    if alive(t_lo) {
        return t_lo;
    }
    let (mut dead, mut live) = (t_lo, horizon);
    for _ in 0..60 {
        let mid = 0.5 * (dead + live);
        if alive(mid) {
            live = mid;
        } else {
            dead = mid;
        }
    }
    live
}

pub fn svg_string(shape: &LimitShape, w: &Window) -> String {
    let horizon = shape.horizon();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="frame"><rect x="{m}" y="{m}" width="{cw}" height="{ch}"/></clipPath></defs>"#,
        m = MARGIN,
        cw = WIDTH - 2.0 * MARGIN,
        ch = HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g clip-path="url(#frame)">"#);

    for cone in shape.cones() {
        let pts = [
            (cone.v_left * w.t0, w.t0),
            (cone.v_right * w.t0, w.t0),
            (cone.v_right * w.t1, w.t1),
            (cone.v_left * w.t1, w.t1),
        ];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, t)| format!("{:.2},{:.2}", w.px(x), w.py(t)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon class="cone" points="{}" fill="#9ab" fill-opacity="0.25" stroke="none"/>"##,
            path.join(" ")
        );
    }

    let profile = shape.profile();
    let t_lo = w.t0.max(1e-6 * horizon);
    for k in 0..FAN {
        let y = w.x0 + (w.x1 - w.x0) * (k as f64 + 0.5) / FAN as f64;
        if profile.kinks().iter().any(|&c| (c - y).abs() < 1e-9) {
            continue;
        }
        let slope = profile.slope_right(y);
        let start = characteristic_start(shape, y, slope, t_lo);
        let end = w.t1.min(horizon);
        if start >= end {
            continue;
        }
        let x_at = |t: f64| y + slope * (horizon - t);
        let _ = writeln!(
            s,
            r##"<line class="characteristic" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#456" stroke-width="0.6"/>"##,
            w.px(x_at(start)),
            w.py(start),
            w.px(x_at(end)),
            w.py(end)
        );
    }

    for seg in &shape.tree().segments {
        if seg.left_piece == seg.right_piece || seg.s1 <= seg.s0 {
            continue;
        }
        let (ta, tb) = (horizon - seg.s0, horizon - seg.s1);
        let _ = writeln!(
            s,
            r##"<line class="shock" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#b22" stroke-width="3" stroke-linecap="round"/>"##,
            w.px(seg.position(seg.s0)),
            w.py(ta),
            w.px(seg.position(seg.s1)),
            w.py(tb)
        );
    }

    for (&x, _) in shape.config().xs().iter().zip(shape.config().hs()) {
        let _ = writeln!(
            s,
            r#"<circle class="probe" cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            w.px(x),
            w.py(horizon)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{cw}" height="{ch}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        cw = WIDTH - 2.0 * MARGIN,
        ch = HEIGHT - 2.0 * MARGIN
    );
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(&mut s, MARGIN, HEIGHT - MARGIN + 16.0, "middle", format!("{}", w.x0));
    label(&mut s, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "middle", format!("{}", w.x1));
    label(&mut s, WIDTH / 2.0, HEIGHT - 12.0, "middle", "x".into());
    label(&mut s, MARGIN - 6.0, HEIGHT - MARGIN + 4.0, "end", format!("{}", w.t0));
    label(&mut s, MARGIN - 6.0, MARGIN + 4.0, "end", format!("{}", w.t1));
    label(&mut s, 14.0, HEIGHT / 2.0, "middle", "t".into());
    s.push_str("</svg>\n");
    s
}

pub fn render_svg(shape: &LimitShape, window: &Window, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(out, svg_string(shape, window)).map_err(|e| CliError::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kpzldp_core::ProbeConfig;

    fn shape(xs: &[f64], hs: &[f64]) -> LimitShape {
        LimitShape::build(&ProbeConfig::new(1.0, xs.to_vec(), hs.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(Window::parse("0,1,-2,2").is_ok());
        assert!(Window::parse("0.5,0.5,-2,2").is_err());
        assert!(Window::parse("0,1,2,-2").is_err());
        assert!(Window::parse("0,1,2").is_err());
        assert!(Window::parse("0,1,a,2").is_err());
    }

    #[test]
    fn single_point_draws_one_vertical_shock() {
        let svg = svg_string(&shape(&[0.0], &[1.0]), &Window::new(0.0, 1.0, -2.0, 2.0).unwrap());
        let shocks: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="shock""#)).collect();
        assert_eq!(shocks.len(), 1);
        assert!(shocks[0].contains(r#"x1="320.00""#) && shocks[0].contains(r#"x2="320.00""#));
        assert_eq!(svg.matches(r#"class="cone""#).count(), 1);
        assert_eq!(svg.matches(r#"class="probe""#).count(), 1);
        assert!(svg.matches(r#"class="characteristic""#).count() > 10);
    }

    #[test]
    fn symmetric_pair_draws_y_shape() {
        let svg = svg_string(&shape(&[-1.0, 1.0], &[0.5, 0.5]), &Window::new(0.0, 1.0, -2.0, 2.0).unwrap());
        assert_eq!(svg.matches(r#"class="shock""#).count(), 3);
        assert_eq!(svg.matches(r#"class="probe""#).count(), 2);
    }

    #[test]
    fn output_is_deterministic() {
        let sh = shape(&[-0.5, 0.8], &[0.4, 0.3]);
        let w = Window::new(0.2, 1.0, -3.0, 3.0).unwrap();
        assert_eq!(svg_string(&sh, &w), svg_string(&sh, &w));
    }
}
