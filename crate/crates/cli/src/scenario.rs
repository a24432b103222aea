//! Scenario files: one JSON object with a `kind` discriminator.

use std::fs;
use std::path::{Path, PathBuf};

use kpzldp_core::she::simulate_ensemble;
use kpzldp_core::{
    hydrodynamic_check, lyapunov_from_duality, rate, symmetry_breaking_scan,
    tree_decomposition_check, LimitShape, ProbeConfig, SimConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::render::{render_svg, Window};

#[derive(Deserialize)]
struct Kind {
    kind: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateScenario {
    #[allow(dead_code)]
    kind: String,
    pub t: f64,
    pub xs: Vec<f64>,
    pub hs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualScenario {
    #[allow(dead_code)]
    kind: String,
    pub t: f64,
    pub xs: Vec<f64>,
    pub masses: Vec<f64>,
}

/// `[start, end, step]` along each axis.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t: [f64; 3],
    pub x: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeScenario {
    #[allow(dead_code)]
    kind: String,
    pub t: f64,
    pub xs: Vec<f64>,
    pub hs: Vec<f64>,
    pub grid: Option<GridSpec>,
    /// Figure window `[t0, t1, x0, x1]`.
    pub window: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeCheckScenario {
    #[allow(dead_code)]
    kind: String,
    pub t: f64,
    pub xs: Vec<f64>,
    pub hs: Vec<f64>,
    pub t_mid: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanScenario {
    #[allow(dead_code)]
    kind: String,
    pub m: f64,
    pub grid_points: usize,
}

#[derive(Debug, Deserialize)]
pub struct SimulateScenario {
    #[allow(dead_code)]
    kind: String,
    /// Scaled `(t, x)` probes for the hydrodynamic check.
    #[serde(default)]
    pub probes: Vec<(f64, f64)>,
    #[serde(flatten)]
    pub config: SimConfig,
    #[serde(flatten)]
    unknown: std::collections::BTreeMap<String, serde_json::Value>,
}

#[derive(Debug)]
pub enum Scenario {
    Rate(RateScenario),
    Dual(DualScenario),
    Shape(ShapeScenario),
    TreeCheck(TreeCheckScenario),
    SymmetryScan(ScanScenario),
    Simulate(SimulateScenario),
}

/// Overrides from the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub zero_noise: bool,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

fn parse_as<T: DeserializeOwned>(path: &str, text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        let field = if field == "." {
            backticked(&inner.to_string())
        } else {
            Some(field)
        };
        CliError::Parse {
            path: path.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })
}

/// Field name quoted in a serde message such as "missing field `hs`".
fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

impl Scenario {
    pub fn parse(path: &str, text: &str) -> Result<Self> {
        let kind: Kind = parse_as(path, text)?;
        Ok(match kind.kind.as_str() {
            "rate" => Scenario::Rate(parse_as(path, text)?),
            "dual" => Scenario::Dual(parse_as(path, text)?),
            "shape" => Scenario::Shape(parse_as(path, text)?),
            "tree-check" => Scenario::TreeCheck(parse_as(path, text)?),
            "symmetry-scan" => Scenario::SymmetryScan(parse_as(path, text)?),
            "simulate" => {
                let sim: SimulateScenario = parse_as(path, text)?;
                if let Some(field) = sim.unknown.keys().next() {
                    return Err(CliError::validation(field, "unknown field"));
                }
                Scenario::Simulate(sim)
            }
            other => {
                return Err(CliError::validation(
                    "kind",
                    format!(
                        "unknown kind `{other}`; expected one of rate, dual, shape, tree-check, symmetry-scan, simulate"
                    ),
                ))
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }
}

/// What a run produced.
#[derive(Debug)]
pub struct Report {
    pub summary: String,
    pub details: serde_json::Value,
    pub files: Vec<PathBuf>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&p, e))?;
        fs::write(&p, text + "\n").map_err(|e| CliError::io(&p, e))
    }

    fn csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
        let p = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&p)
            .map_err(|e| CliError::io(&p, e))?;
        w.write_record(header).map_err(|e| CliError::io(&p, e))?;
        for row in rows {
            w.serialize(row).map_err(|e| CliError::io(&p, e))?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))
    }
}

fn probe_config(t: f64, xs: &[f64], hs: &[f64]) -> Result<ProbeConfig> {
    ProbeConfig::new(t, xs.to_vec(), hs.to_vec()).map_err(CliError::core("profile"))
}

fn axis(name: &str, [start, end, step]: [f64; 3]) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(CliError::validation(
            name,
            format!("range [{start}, {end}] with step {step} is empty"),
        ));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

pub fn run(scenario: &Scenario, out: &Path, overrides: &Overrides) -> Result<Report> {
    let mut files = Outputs::new(out)?;
    let (summary, details) = match scenario {
        Scenario::Rate(s) => {
            let cfg = probe_config(s.t, &s.xs, &s.hs)?;
            let result = rate(&cfg);
            files.json("rate.json", &result)?;
            (
                format!("rate value={} reduced_set={:?}", result.value, result.reduced_set),
                serde_json::to_value(&result).unwrap(),
            )
        }
        Scenario::Dual(s) => {
            let pair = lyapunov_from_duality(s.t, &s.xs, &s.masses).map_err(CliError::core("legendre"))?;
            files.json("dual.json", &pair)?;
            (
                format!("dual lyapunov={} argmax={:?}", pair.lyapunov, pair.config.hs()),
                serde_json::to_value(&pair).unwrap(),
            )
        }
        Scenario::Shape(s) => {
            let cfg = probe_config(s.t, &s.xs, &s.hs)?;
            let shape = LimitShape::build(&cfg).map_err(CliError::core("shape"))?;
            let grid = s.grid.clone().unwrap_or(GridSpec {
                t: [0.1 * s.t, s.t, 0.05 * s.t],
                x: [-4.0, 4.0, 0.05],
            });
            let ts = axis("grid.t", grid.t)?;
            let xs = axis("grid.x", grid.x)?;
            if ts[0] <= 0.0 || *ts.last().unwrap() > s.t * (1.0 + 1e-12) {
                return Err(CliError::validation("grid.t", format!("times must lie in (0, {}]", s.t)));
            }
            let mut rows = Vec::with_capacity(ts.len() * xs.len());
            for &t in &ts {
                for &x in &xs {
                    rows.push((t, x, shape.eval(t, x).map_err(CliError::core("shape"))?));
                }
            }
            files.json("shape.json", &shape)?;
            files.json("tree.json", shape.tree())?;
            files.csv("grid.csv", &["t", "x", "psi"], rows)?;
            let window = match s.window {
                Some(w) => Window::from_array(w)?,
                None => Window::new(0.0, s.t, -4.0, 4.0)?,
            };
            let svg = files.path("shape.svg");
            render_svg(&shape, &window, &svg)?;
            (
                format!(
                    "shape cones={} shocks={} merges={}",
                    shape.cones().len(),
                    shape.tree().segments.len(),
                    shape.tree().events.len()
                ),
                json!({ "cones": shape.cones(), "events": shape.tree().events }),
            )
        }
        Scenario::TreeCheck(s) => {
            let cfg = probe_config(s.t, &s.xs, &s.hs)?;
            let check = tree_decomposition_check(&cfg, s.t_mid).map_err(CliError::core("legendre"))?;
            let report = check.report();
            files.json("tree_check.json", &report)?;
            (
                format!(
                    "tree-check lhs={} rhs={} diff={:.3e}",
                    check.lhs,
                    check.rhs,
                    (check.lhs - check.rhs).abs()
                ),
                report,
            )
        }
        Scenario::SymmetryScan(s) => {
            let scan = symmetry_breaking_scan(s.m, s.grid_points).map_err(CliError::core("legendre"))?;
            files.csv("scan.csv", &["m_minus", "L"], scan.points.iter().map(|p| (p.m_minus, p.l)))?;
            files.json("scan.json", &scan)?;
            let last = scan.points.len() - 1;
            (
                format!(
                    "symmetry-scan endpoints=({}, {}) interior_max={} margin={:.6e} maximizers={:?}",
                    scan.points[0].l,
                    scan.points[last].l,
                    scan.interior_max,
                    scan.margin,
                    scan.maximizers()
                ),
                serde_json::to_value(&scan).unwrap(),
            )
        }
        Scenario::Simulate(s) => {
            let mut cfg = s.config.clone();
            if overrides.zero_noise {
                cfg.zero_noise = true;
            }
            if let Some(n) = overrides.samples {
                cfg.samples = n;
            }
            if let Some(seed) = overrides.seed {
                cfg.seed = seed;
            }
            let first = simulate_ensemble(&SimConfig { samples: 1, ..cfg.clone() })
                .map_err(CliError::core("she-sim"))?
                .remove(0);
            files.csv("field.csv", &["t", "x", "Z", "h"], first.records())?;
            let bin = files.path("field.bin");
            let handle = fs::File::create(&bin).map_err(|e| CliError::io(&bin, e))?;
            first
                .write_binary(std::io::BufWriter::new(handle))
                .map_err(|e| CliError::io(&bin, e))?;
            let mut details = json!({
                "config": cfg,
                "positivity_violations": first.positivity_violations,
            });
            let mut summary = format!(
                "simulate cells={} times={} negative_updates={}",
                first.cells(),
                first.times.len(),
                first.positivity_violations
            );
            if !s.probes.is_empty() {
                let report = hydrodynamic_check(&cfg, &s.probes).map_err(CliError::core("she-sim"))?;
                files.json("hydro.json", &report)?;
                summary.push_str(&format!(
                    " hydro_pass={} samples={}",
                    report.pass, report.samples
                ));
                for p in &report.probes {
                    summary.push_str(&format!(" ({},{}):mean={:.4}", p.t, p.x, p.mean));
                }
                details["hydro"] = serde_json::to_value(&report).unwrap();
            }
            (summary, details)
        }
    };
    Ok(Report {
        summary,
        details,
        files: files.files,
    })
}
