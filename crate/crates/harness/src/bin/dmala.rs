use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmala_harness::{run, ExperimentConfig, ExperimentKind, HarnessError, Result};

#[derive(Parser)]
#[command(name = "dmala", version, about = "Seeded DMALA detection experiments")]
struct Cli {
    #[command(subcommand)]
    experiment: Command,
    /// JSON file overlaid on the experiment defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: output_path from the config, else results/<experiment>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores); outputs do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Exact and empirical TV decay on one oracle-scale instance
    TvCurve,
    /// Naive vs preconditioned convergence rates across SNR
    RateBoxplot,
    /// Uncoded symbol error rates per detector
    SerSweep,
    /// IS and list LLRs against the exhaustive reference
    LlrFidelity,
    /// Per-state probabilities of the posterior and both kernels
    DistHistogram,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::TvCurve => ExperimentKind::TvCurve,
            Command::RateBoxplot => ExperimentKind::RateBoxplot,
            Command::SerSweep => ExperimentKind::SerSweep,
            Command::LlrFidelity => ExperimentKind::LlrFidelity,
            Command::DistHistogram => ExperimentKind::DistHistogram,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let kind = cli.experiment.kind();
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?,
        None => "{}".to_string(),
    };
    let mut config = ExperimentConfig::from_json(kind, &text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main_inner(cli: &Cli) -> Result<()> {
    let config = load(cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results").join(config.experiment.as_str()));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(HarnessError::Config("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let record = pool.install(|| run(&config, &out))?;
    eprintln!(
        "{} finished in {:.2} s; results in {}",
        config.experiment,
        record.wall_clock_seconds,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
