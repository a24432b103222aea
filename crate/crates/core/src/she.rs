//! Desk-scale simulation of the stochastic heat equation
//! `∂_t Z = ½ ∂_xx Z + ξ Z` from delta-like data.
//!
//! The scheme is explicit Euler in time with the Itô product for the noise:
//! each step multiplies every cell by `1 + sqrt(dt/dx) g` with independent
//! standard normals `g`, after the discrete heat step. The first moment of
//! the lattice field therefore solves the discrete heat equation exactly.
//!
//! Coordinates come in two flavours. The simulator works in unscaled
//! `(τ, y)`; scaled heights are read at `(t, x)` with `τ = T t`, `y = N T x`
//! and `h = log Z / (N^2 T)`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::profile::parab;

/// `exp(-x^2/(2t)) / sqrt(2 π t)`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok((-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt())
}

/// Heat flow at time `tau` of the indicator of `[-w, w]`, evaluated with
/// complementary error functions so the tails keep their relative accuracy.
pub fn strip_solution(tau: f64, y: f64, w: f64) -> f64 {
    let s = (2.0 * tau).sqrt();
    let y = y.abs();
    0.5 * (erfc((y - w) / s) - erfc((y + w) / s))
}

fn default_n() -> u32 {
    8
}
fn default_t() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.05
}
fn default_dx() -> f64 {
    0.05
}
fn default_dt() -> f64 {
    0.001
}
fn default_window() -> f64 {
    16.0
}
fn default_samples() -> usize {
    1
}
fn default_output_times() -> Vec<f64> {
    vec![1.0]
}
fn default_tolerance() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "N", default = "default_n")]
    pub n: u32,
    /// Time scale.
    #[serde(rename = "T", default = "default_t")]
    pub t_scale: f64,
    /// Half-width of the initial strip in scaled units.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Half-width of the unscaled spatial domain.
    #[serde(default = "default_window")]
    pub x_window: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Scaled times in `(0, 1]` at which the field is recorded.
    #[serde(default = "default_output_times")]
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub zero_noise: bool,
    /// Pass threshold for `|mean h - p|` in the hydrodynamic check.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            t_scale: default_t(),
            alpha: default_alpha(),
            dx: default_dx(),
            dt: default_dt(),
            x_window: default_window(),
            samples: default_samples(),
            seed: 0,
            output_times: default_output_times(),
            zero_noise: false,
            tolerance: default_tolerance(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(Error::config("N", "must be a positive integer"));
        }
        positive("T", self.t_scale)?;
        positive("alpha", self.alpha)?;
        positive("dx", self.dx)?;
        positive("dt", self.dt)?;
        positive("x_window", self.x_window)?;
        positive("tolerance", self.tolerance)?;
        if self.dt > 0.5 * self.dx * self.dx {
            return Err(Error::config(
                "dt",
                format!("explicit scheme needs dt <= dx^2/2 = {}, got {}", 0.5 * self.dx * self.dx, self.dt),
            ));
        }
        let cells = self.x_window / self.dx;
        if (cells - cells.round()).abs() > 1e-6 * cells.max(1.0) {
            return Err(Error::config("x_window", "must be a whole multiple of dx"));
        }
        if self.samples == 0 {
            return Err(Error::config("samples", "need at least one sample"));
        }
        if self.output_times.is_empty() {
            return Err(Error::config("output_times", "need at least one output time"));
        }
        if let Some(t) = self.output_times.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::config("output_times", format!("times must lie in (0, 1], got {t}")));
        }
        let strip = self.alpha * self.n as f64 * self.t_scale;
        if strip >= self.x_window {
            return Err(Error::config("x_window", "initial strip does not fit in the domain"));
        }
        Ok(())
    }

    /// `N^2 T`.
    pub fn height_scale(&self) -> f64 {
        let n = self.n as f64;
        n * n * self.t_scale
    }

    /// Unscaled half-width `α N T` of the initial strip.
    pub fn strip_half_width(&self) -> f64 {
        self.alpha * self.n as f64 * self.t_scale
    }

    fn half_cells(&self) -> usize {
        (self.x_window / self.dx).round() as usize
    }

    fn step_of(&self, t: f64) -> usize {
        (t * self.t_scale / self.dt).round() as usize
    }

    /// Zero-noise scaled height from the exact heat flow of the strip.
    pub fn reference_height(&self, t: f64, x: f64) -> f64 {
        let n = self.n as f64;
        let z = strip_solution(self.t_scale * t, n * self.t_scale * x, self.strip_half_width());
        z.ln() / self.height_scale()
    }
}

/// One realisation of the field at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub config: SimConfig,
    /// Index of the RNG stream below the master seed.
    pub sample_index: u64,
    /// Unscaled recorded times.
    pub times: Vec<f64>,
    /// Leftmost unscaled grid point; the grid spacing is `config.dx`.
    pub x0: f64,
    /// `z[k][i]` is the field at `times[k]` and `x0 + i dx`.
    pub z: Vec<Vec<f64>>,
    /// `log z / (N^2 T)`; minus infinity where `z <= 0`.
    pub h_scaled: Vec<Vec<f64>>,
    /// Cell updates that produced a negative value.
    pub positivity_violations: u64,
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    config: SimConfig,
    sample_index: u64,
    times: Vec<f64>,
    x0: f64,
    dx: f64,
    cells: usize,
    positivity_violations: u64,
}

impl FieldSample {
    fn scaled_rows(config: &SimConfig, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let scale = config.height_scale();
        z.iter()
            .map(|row| {
                row.iter()
                    .map(|&v| if v > 0.0 { v.ln() / scale } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect()
    }

    pub fn cells(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    pub fn grid_x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.config.dx
    }

    /// Rows `(t, x, Z, h)` in scaled coordinates.
    pub fn records(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let nt = self.config.n as f64 * self.config.t_scale;
        self.times.iter().enumerate().flat_map(move |(k, &tau)| {
            (0..self.cells()).map(move |i| {
                (
                    tau / self.config.t_scale,
                    self.grid_x(i) / nt,
                    self.z[k][i],
                    self.h_scaled[k][i],
                )
            })
        })
    }

    /// Length-prefixed JSON header followed by the field as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = DumpHeader {
            config: self.config.clone(),
            sample_index: self.sample_index,
            times: self.times.clone(),
            x0: self.x0,
            dx: self.config.dx,
            cells: self.cells(),
            positivity_violations: self.positivity_violations,
        };
        let json = serde_json::to_vec(&header)?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        for row in &self.z {
            for v in row {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Numeric(format!("reading field dump: {e}"));
        let mut len = [0u8; 8];
        input.read_exact(&mut len).map_err(io)?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        input.read_exact(&mut json).map_err(io)?;
        let header: DumpHeader = serde_json::from_slice(&json)
            .map_err(|e| Error::Numeric(format!("field dump header: {e}")))?;
        let mut z = Vec::with_capacity(header.times.len());
        let mut buf = [0u8; 8];
        for _ in 0..header.times.len() {
            let mut row = Vec::with_capacity(header.cells);
            for _ in 0..header.cells {
                input.read_exact(&mut buf).map_err(io)?;
                row.push(f64::from_le_bytes(buf));
            }
            z.push(row);
        }
        Ok(Self {
            h_scaled: Self::scaled_rows(&header.config, &z),
            config: header.config,
            sample_index: header.sample_index,
            times: header.times,
            x0: header.x0,
            z,
            positivity_violations: header.positivity_violations,
        })
    }
}

fn initial_strip(config: &SimConfig, x0: f64, cells: usize) -> Vec<f64> {
    let w = config.strip_half_width();
    let dx = config.dx;
    (0..cells)
        .map(|i| {
            let c = x0 + i as f64 * dx;
            let lo = (c - 0.5 * dx).max(-w);
            let hi = (c + 0.5 * dx).min(w);
            ((hi - lo) / dx).max(0.0)
        })
        .collect()
}

/// Runs the sample with RNG stream `sample_index` under the master seed.
pub fn simulate_sample(config: &SimConfig, sample_index: u64) -> Result<FieldSample> {
    config.validate()?;
    let half = config.half_cells();
    let cells = 2 * half + 1;
    let x0 = -(half as f64) * config.dx;
    let mut record_steps: Vec<usize> = config.output_times.iter().map(|&t| config.step_of(t)).collect();
    record_steps.sort_unstable();
    record_steps.dedup();
    if record_steps[0] == 0 {
        return Err(Error::config("output_times", "an output time rounds to step zero"));
    }
    let last = *record_steps.last().unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(sample_index);
    let diffusion = 0.5 * config.dt / (config.dx * config.dx);
    let sigma = if config.zero_noise { 0.0 } else { (config.dt / config.dx).sqrt() };

    let mut z = initial_strip(config, x0, cells);
    z[0] = 0.0;
    z[cells - 1] = 0.0;
    let mut next = vec![0.0; cells];
    let mut rows = Vec::with_capacity(record_steps.len());
    let mut times = Vec::with_capacity(record_steps.len());
    let mut violations = 0u64;
    let mut wanted = record_steps.iter().peekable();
    for step in 1..=last {
        for i in 1..cells - 1 {
            let zi = z[i];
            let mut v = zi + diffusion * (z[i - 1] - 2.0 * zi + z[i + 1]);
            if sigma > 0.0 {
                let g: f64 = rng.sample(StandardNormal);
                v += zi * sigma * g;
            }
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite field at step {step} (t={}), cell {i} (x={})",
                    step as f64 * config.dt,
                    x0 + i as f64 * config.dx
                )));
            }
            if v < 0.0 {
                violations += 1;
            }
            next[i] = v;
        }
        std::mem::swap(&mut z, &mut next);
        if wanted.peek() == Some(&&step) {
            wanted.next();
            rows.push(z.clone());
            times.push(step as f64 * config.dt);
        }
    }
    Ok(FieldSample {
        h_scaled: FieldSample::scaled_rows(config, &rows),
        config: config.clone(),
        sample_index,
        times,
        x0,
        z: rows,
        positivity_violations: violations,
    })
}

/// The first sample of the configuration.
pub fn simulate_she(config: &SimConfig) -> Result<FieldSample> {
    simulate_sample(config, 0)
}

/// All `config.samples` samples, run in parallel.
pub fn simulate_ensemble(config: &SimConfig) -> Result<Vec<FieldSample>> {
    config.validate()?;
    (0..config.samples as u64)
        .into_par_iter()
        .map(|k| simulate_sample(config, k))
        .collect()
}

/// Scaled height `log Z(T t, N T x) / (N^2 T)`, linearly interpolated in
/// space between grid cells.
pub fn scaled_height(sample: &FieldSample, t: f64, x: f64) -> Result<f64> {
    let cfg = &sample.config;
    let tau = cfg.t_scale * t;
    let k = sample
        .times
        .iter()
        .position(|&s| (s - tau).abs() <= 0.5 * cfg.dt)
        .ok_or_else(|| Error::Domain(format!("time t={t} was not recorded")))?;
    let y = cfg.n as f64 * cfg.t_scale * x;
    let pos = (y - sample.x0) / cfg.dx;
    let cells = sample.cells();
    if !(pos >= 0.0 && pos <= (cells - 1) as f64) {
        return Err(Error::Domain(format!("x={x} lies outside the simulated window")));
    }
    let i = (pos.floor() as usize).min(cells - 2);
    let frac = pos - i as f64;
    let row = &sample.z[k];
    let h = &sample.h_scaled[k];
    for j in [i, i + 1] {
        if !(row[j] > 0.0) {
            return Err(Error::Numeric(format!(
                "field is not positive at t={t}, x={} (Z={})",
                sample.grid_x(j) / (cfg.n as f64 * cfg.t_scale),
                row[j]
            )));
        }
    }
    if frac == 0.0 {
        return Ok(h[i]);
    }
    Ok((1.0 - frac) * h[i] + frac * h[i + 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStat {
    pub t: f64,
    pub x: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub parabola: f64,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroReport {
    pub samples: usize,
    pub tolerance: f64,
    pub probes: Vec<ProbeStat>,
    pub positivity_violations: u64,
    pub pass: bool,
}

/// Sample mean and spread of the scaled height at each probe, compared with
/// the parabola.
pub fn hydrodynamic_check(config: &SimConfig, probes: &[(f64, f64)]) -> Result<HydroReport> {
    let mut cfg = config.clone();
    cfg.output_times = probes.iter().map(|p| p.0).collect();
    cfg.validate()?;
    let window = cfg.x_window / (cfg.n as f64 * cfg.t_scale);
    if let Some(p) = probes.iter().find(|p| p.1.abs() > window) {
        return Err(Error::Domain(format!("probe {p:?} lies outside the simulated window")));
    }
    let per_sample = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|k| {
            let s = simulate_sample(&cfg, k)?;
            let hs = probes
                .iter()
                .map(|&(t, x)| scaled_height(&s, t, x))
                .collect::<Result<Vec<f64>>>()?;
            Ok((hs, s.positivity_violations))
        })
        .collect::<Result<Vec<(Vec<f64>, u64)>>>()?;
    let n = per_sample.len() as f64;
    let stats: Vec<ProbeStat> = probes
        .iter()
        .enumerate()
        .map(|(j, &(t, x))| {
            let mean = per_sample.iter().map(|s| s.0[j]).sum::<f64>() / n;
            let var = per_sample.iter().map(|s| (s.0[j] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let parabola = parab(t, x);
            let deviation = mean - parabola;
            ProbeStat {
                t,
                x,
                mean,
                std_dev: var.sqrt(),
                parabola,
                deviation,
                pass: deviation.abs() < cfg.tolerance,
            }
        })
        .collect();
    Ok(HydroReport {
        samples: cfg.samples,
        tolerance: cfg.tolerance,
        pass: stats.iter().all(|s| s.pass),
        probes: stats,
        positivity_violations: per_sample.iter().map(|s| s.1).sum(),
    })
}

/// Largest relative error of a recorded zero-noise row against the exact
/// heat flow, over cells with `|y| <= reach`.
pub fn heat_relative_error(sample: &FieldSample, k: usize, reach: f64) -> f64 {
    let w = sample.config.strip_half_width();
    let tau = sample.times[k];
    (0..sample.cells())
        .filter(|&i| sample.grid_x(i).abs() <= reach)
        .map(|i| {
            let exact = strip_solution(tau, sample.grid_x(i), w);
            ((sample.z[k][i] - exact) / exact).abs()
        })
        .fold(0.0, f64::max)
}
