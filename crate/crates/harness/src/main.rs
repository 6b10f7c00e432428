use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use sclab::{run, ExperimentConfig, HarnessError, RunOptions};

#[derive(Parser)]
#[command(name = "sclab", version, about = "Spectral cluster experiments on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the spectrum below a cutoff.
    Spectrum(Common),
    /// Measure spectral-window operator norms.
    Opnorm(Common),
    /// Build Knapp plates about a periodic geodesic and measure them.
    KnappScan(Common),
    /// Measure Gaussian beams and zonal harmonics on S².
    BeamScan(Common),
    /// Decay of the Knapp kernel away from the origin.
    KernelDecay(Common),
    /// Fit a growth law to (λ, N) samples.
    Fit(Common),
    /// Classify the curvature branch of a growth curve.
    Classify(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::Spectrum(c) => ("spectrum", c),
            Command::Opnorm(c) => ("opnorm", c),
            Command::KnappScan(c) => ("knapp-scan", c),
            Command::BeamScan(c) => ("beam-scan", c),
            Command::KernelDecay(c) => ("kernel-decay", c),
            Command::Fit(c) => ("fit", c),
            Command::Classify(c) => ("classify", c),
        }
    }
}

fn execute(name: &str, args: Common) -> Result<(), HarnessError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(HarnessError::Validation("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Validation(format!("thread pool: {e}")))?;
    }
    let config = ExperimentConfig::load(&args.config)?;
    if config.experiment.name() != name {
        return Err(HarnessError::Validation(format!(
            "config describes a `{}` experiment, not `{name}`",
            config.experiment.name()
        )));
    }
    let manifest = run(
        &config,
        &RunOptions {
            out_dir: args.out,
            row_limit: None,
        },
    )?;
    for o in &manifest.outputs {
        println!("{}  {}", o.sha256, o.file);
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let (name, args) = Cli::parse().command.split();
    match execute(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
