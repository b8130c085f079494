use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shockfront::config::{RunConfig, StageSelection};
use shockfront::pipeline::run_pipeline;
use shockfront::report::{explain, PipelineReport};
use shockfront::Error;

#[derive(Parser)]
#[command(name = "shockfront", version, about = "Multidimensional relaxation shocks: spectral checks, front model and simulation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized searches; overrides `output.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Structural hypotheses at both endpoints (and along the profile).
    Hypotheses,
    /// Traveling-wave profile and its residual.
    Profile,
    /// Chapman–Enskog coefficients and dispersion fit.
    Enskog,
    /// Evans function windings, derivative at the origin, critical root and resolvent checks.
    Evans(EvansArgs),
    /// Front deformation decay rates and kernels.
    Front,
    /// Nonlinear 2-D experiment.
    Simulate,
    /// All stages selected in the config.
    Pipeline,
    /// Human-readable summary of a report.
    Explain {
        /// Report path (default: `<out>/report.json`).
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EvansArgs {
    #[arg(long)]
    radius_min: Option<f64>,
    #[arg(long)]
    radius_max: Option<f64>,
    #[arg(long)]
    shape: Option<String>,
    /// Transverse frequencies for the winding checks, comma separated.
    #[arg(long, value_delimiter = ',')]
    xi: Option<Vec<f64>>,
}

const EXIT_STAGE_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn load(global: &Global) -> shockfront::Result<RunConfig> {
    let path = global.config.as_deref().ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = global.seed {
        cfg.output.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.output.dir = out.display().to_string();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> shockfront::Result<ExitCode> {
    let stage = match &cli.command {
        Command::Explain { report } => {
            let path = match report {
                Some(p) => p.clone(),
                None => cli.global.out.clone().unwrap_or_else(|| PathBuf::from("out")).join("report.json"),
            };
            return explain_file(&path);
        }
        Command::Pipeline => None,
        Command::Hypotheses => Some("hypotheses"),
        Command::Profile => Some("profile"),
        Command::Enskog => Some("enskog"),
        Command::Evans(_) => Some("evans"),
        Command::Front => Some("front"),
        Command::Simulate => Some("simulate"),
    };
    let mut cfg = load(&cli.global)?;
    if let Some(name) = stage {
        let optional = std::mem::take(&mut cfg.stages.optional);
        cfg.stages = StageSelection { optional, ..StageSelection::only(name) };
    }
    if let Command::Evans(a) = &cli.command {
        let c = &mut cfg.evans.contour;
        c.radius_min = a.radius_min.unwrap_or(c.radius_min);
        c.radius_max = a.radius_max.unwrap_or(c.radius_max);
        if let Some(s) = &a.shape {
            c.shape = s.clone();
        }
        if let Some(xi) = &a.xi {
            cfg.evans.xi = xi.clone();
        }
    }
    cfg.validate()?;
    let out = PathBuf::from(&cfg.output.dir);
    let outcome = run_pipeline(&cfg, &out)?;
    for line in explain(&outcome.report) {
        println!("{line}");
    }
    println!("report: {}", out.join("report.json").display());
    Ok(if outcome.success() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_STAGE_FAILED) })
}

fn explain_file(path: &Path) -> shockfront::Result<ExitCode> {
    let text = std::fs::read_to_string(path)?;
    let report = PipelineReport::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for line in explain(&report) {
        println!("{line}");
    }
    Ok(if report.success() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_STAGE_FAILED) })
}
