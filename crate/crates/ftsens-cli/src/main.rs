//! Experiment runner: configuration, batch execution, machine-readable
//! outputs, and plot-data emission.
//!
//! Exit codes: 0 when every check certified/verified, 2 when a run
//! reports a suspected violation, 1 on errors.

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::load_spec;
use tasks::{
    CertifyArgs, ContinuumArgs, DemoArgs, EntropyArgs, FirstTimeArgs, FtmetricArgs, RunArgs,
    SplitTreeArgs,
};

#[derive(Parser)]
#[command(name = "ftsens", version, about = "first-time sensitivity laboratory")]
struct Cli {
    /// worker pool size (env FTSENS_JOBS overrides; default: logical cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// output directory for reports, CSV tables and plot data
    #[arg(long, global = true, default_value = "ftsens-out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// First-increasing time of one ball, with its diameter trace
    FirstTime(FirstTimeArgs),
    /// Certify the bounded-jump conditions over a radius schedule
    Certify(CertifyArgs),
    /// Build a local cw-unstable continuum record
    Continuum(ContinuumArgs),
    /// Generate catalogs and check the chain metric inequalities
    Ftmetric(FtmetricArgs),
    /// Greedy separated-set growth estimate
    Entropy(EntropyArgs),
    /// Exact split-tree separation certificate on the shift
    SplitTree(SplitTreeArgs),
    /// The sensitive-but-not-first-time-sensitive flow demonstration
    DemoNotft(DemoArgs),
    /// Quick exact self-checks
    Selftest,
    /// Run a task described by a TOML experiment file
    Run(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = std::env::var("FTSENS_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .or(cli.jobs);
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    std::fs::create_dir_all(&cli.out)?;
    let out = &cli.out;
    let code = match cli.cmd {
        Cmd::FirstTime(a) => tasks::first_time(&a, out)?,
        Cmd::Certify(a) => tasks::certify_task(&a, out)?,
        Cmd::Continuum(a) => tasks::continuum(&a, out)?,
        Cmd::Ftmetric(a) => tasks::ftmetric(&a, out)?,
        Cmd::Entropy(a) => tasks::entropy(&a, out)?,
        Cmd::SplitTree(a) => tasks::split_tree_task(&a, out)?,
        Cmd::DemoNotft(a) => tasks::demo_notft(&a, out)?,
        Cmd::Selftest => tasks::selftest()?,
        Cmd::Run(a) => {
            let spec = load_spec(&a.config)?;
            tasks::run_spec(&spec)?
        }
    };
    Ok(ExitCode::from(code))
}
