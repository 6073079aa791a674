//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid configuration or I/O errors,
//! 2 when a time step fails (partial output is still written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::oracle::ModalSystem;

pub use commands::{
    cmd_energy_audit, cmd_oracle_check, cmd_run, cmd_sweep, EXIT_INVALID, EXIT_OK, EXIT_STEP_FAILURE,
};
pub use config::{
    BetaConfig, ConfigError, InitialConfig, NonlinearityConfig, Num, ParamsConfig, PiConfig, Problem, RunConfig,
    SolvePathConfig, SolverConfig, StepNeed,
};
pub use output::Header;

#[derive(Debug, Parser)]
#[command(name = "soundheat", version, about = "Implicit time stepping for coupled sound and heat flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory.
    Run(CommonArgs),
    /// Convergence sweep over `h_list`.
    Sweep(CommonArgs),
    /// Per-step energy balance and Lyapunov check.
    EnergyAudit(CommonArgs),
    /// Compare with the exact modal solution (linear problems only).
    OracleCheck(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every k-th state to `snapshots.csv` (run only).
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub snapshot_stride: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

/// Parses `args` and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let (need, args) = match &cli.command {
        Command::Run(a) | Command::EnergyAudit(a) | Command::OracleCheck(a) => (StepNeed::Single, a),
        Command::Sweep(a) => (StepNeed::List, a),
    };
    let problem = match RunConfig::load(&args.config).and_then(|c| c.build(need)) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if matches!(cli.command, Command::OracleCheck(_)) {
        if let Err(e) = ModalSystem::new(&problem.bundle, &problem.nonlin) {
            eprintln!("error: config field `nonlinearity`: {e}");
            return EXIT_INVALID;
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| problem.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_INVALID;
    }
    let go = || match &cli.command {
        Command::Run(_) => cmd_run(&problem, &out, args.snapshot_stride.map(|k| k as usize)),
        Command::Sweep(_) => cmd_sweep(&problem, &out),
        Command::EnergyAudit(_) => cmd_energy_audit(&problem, &out),
        Command::OracleCheck(_) => cmd_oracle_check(&problem, &out),
    };
    let result = match args.threads {
        None => go(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(go),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return EXIT_INVALID;
            }
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
