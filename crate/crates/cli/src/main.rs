use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use randnls_cli::config::Experiment;
use randnls_cli::{configure_threads, execute, Invocation};

/// Run one randnls experiment.
#[derive(Debug, Parser)]
#[command(name = "randnls", version)]
struct Args {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. The flag takes precedence over RANDNLS_THREADS.
    #[arg(long, env = "RANDNLS_THREADS")]
    threads: Option<usize>,
    /// Largest spherical-harmonic degree (sphere-lemma).
    #[arg(long)]
    nmax: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        configure_threads(n.max(1));
    }
    let code = execute(&Invocation {
        experiment: args.experiment,
        config: args.config,
        out: args.out,
        seed: args.seed,
        nmax: args.nmax,
    });
    ExitCode::from(code as u8)
}
