//! Experiment runner for `randnls`.
//!
//! A run is one experiment, configured by a JSON [`RunConfig`](config::RunConfig)
//! and writing into one output directory:
//!
//! - `diagnostics.csv` with the header
//!   `t,mass,energy,h1_sq,density_L4,virial,virial_rate,A,B,D,E,modE,scatter_cauchy`
//!   (empty cells where a quantity is not recorded),
//! - `summary.json`, always, with status, drifts, fitted slopes and the
//!   experiment's invariant bundle,
//! - experiment reports (`compare.json`, `sphere_report.json`) and optional
//!   `snapshots/`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O
//! failure. A failed invariant is reported in the summary, not in the exit code.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use config::{Experiment, RunConfig, SphereSettings};
use output::Summary;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Core errors raised while building the initial state are user errors.
    pub fn config(e: randnls::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<randnls::Error> for CliError {
    fn from(e: randnls::Error) -> Self {
        use randnls::Error as E;
        match e {
            E::Integration { .. } | E::LinearAlgebra(_) => CliError::Numerical(e.to_string()),
            E::Serde(err) => CliError::Io(std::io::Error::other(err)),
            E::InvalidInput(_) | E::Structural(_) | E::Unsupported(_) => CliError::Config(e.to_string()),
        }
    }
}

/// Command-line level inputs; everything else comes from the config file.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub experiment: Experiment,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub nmax: Option<usize>,
}

/// Loads, overrides and validates the config; on failure also returns the
/// output directory, if one is known, so the summary can still be written.
pub fn prepare(inv: &Invocation) -> Result<(RunConfig, PathBuf), (CliError, Option<PathBuf>)> {
    let loaded = match &inv.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => return Err((e, inv.out.clone())),
    };
    let Some(dir) = inv.out.clone().or_else(|| cfg.output.clone()) else {
        return Err((CliError::Config("no output directory (use --out or \"output\")".into()), None));
    };
    if let Some(e) = cfg.experiment {
        if e != inv.experiment {
            let msg = format!("config is for {e} but {} was requested", inv.experiment);
            return Err((CliError::Config(msg), Some(dir)));
        }
    }
    cfg.experiment = Some(inv.experiment);
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    if let Some(n) = inv.nmax {
        cfg.sphere.get_or_insert_with(SphereSettings::default).n_max = n;
    }
    match cfg.validate() {
        Ok(()) => Ok((cfg, dir)),
        Err(e) => Err((e, Some(dir))),
    }
}

/// Runs one invocation end to end and returns the process exit code.
pub fn execute(inv: &Invocation) -> i32 {
    let mut summary = Summary::new(Some(inv.experiment));
    let (cfg, dir) = match prepare(inv) {
        Ok(v) => v,
        Err((e, dir)) => {
            eprintln!("error: {e}");
            summary.fail(&e);
            summary.finalize();
            if let Some(dir) = dir {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = summary.write(&dir);
                }
            }
            return e.exit_code();
        }
    };
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return 4;
    }
    if let Err(e) = experiments::run(&cfg, &dir, &mut summary) {
        eprintln!("error: {e}");
        summary.fail(&e);
    }
    summary.finalize();
    if let Err(e) = summary.write(&dir) {
        eprintln!("error: cannot write summary: {e}");
        return 4;
    }
    println!(
        "{}: {} ({})",
        inv.experiment,
        if summary.passed { "passed" } else { "failed" },
        dir.display()
    );
    summary.exit_code
}

/// Sizes the global rayon pool; a no-op if it is already built.
pub fn configure_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}
