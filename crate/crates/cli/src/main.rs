mod error;
mod render;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kpzldp_core::{LimitShape, ProbeConfig};
use serde::Deserialize;

use error::{CliError, Result};
use render::{render_svg, Window};
use scenario::{Overrides, Scenario};

#[derive(Parser)]
#[command(name = "kpzldp", version, about = "Rate functions, Lyapunov exponents and limit shapes for KPZ upper tails")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its outputs.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the full result as JSON after the summary line.
        #[arg(long)]
        verbose: bool,
        /// Simulations only: switch the noise off.
        #[arg(long)]
        zero_noise: bool,
        /// Simulations only: number of samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Simulations only: master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a limit shape as SVG.
    Render {
        /// A `shape.json` written by a shape scenario, or a probe configuration `{t, xs, hs}`.
        shape: PathBuf,
        /// `t0,t1,x0,x1`
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ShapeInput {
    Shape(LimitShape),
    Config(ProbeConfig),
}

fn load_shape(path: &Path) -> Result<LimitShape> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let input: ShapeInput = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        field: None,
        message: format!("expected a limit shape or a probe configuration: {e}"),
    })?;
    match input {
        ShapeInput::Shape(shape) => Ok(shape),
        ShapeInput::Config(cfg) => LimitShape::build(&cfg).map_err(CliError::core("shape")),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("KPZLDP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::validation("KPZLDP_THREADS", format!("expected a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::validation("KPZLDP_THREADS", e.to_string()))
}

fn execute(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            scenario,
            out,
            verbose,
            zero_noise,
            samples,
            seed,
        } => {
            let parsed = Scenario::load(&scenario)?;
            let overrides = Overrides {
                zero_noise,
                samples,
                seed,
            };
            let report = scenario::run(&parsed, &out, &overrides)?;
            let files: Vec<String> = report.files.iter().map(|p| p.display().to_string()).collect();
            println!("{} files=[{}]", report.summary, files.join(", "));
            if verbose {
                println!("{}", serde_json::to_string_pretty(&report.details).unwrap());
            }
        }
        Command::Render { shape, window, out } => {
            let window = Window::parse(&window)?;
            let shape = load_shape(&shape)?;
            render_svg(&shape, &window, &out)?;
            println!("render files=[{}]", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            println!("{}", err.to_json());
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
