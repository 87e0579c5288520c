use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod emit;
mod params;

use params::*;

/// Phase-space hydrogen model: brackets, spectral measures and numerical experiments.
#[derive(Parser, Debug)]
#[command(name = "phasespace", version)]
struct Cli {
    /// TOML config file, or a manifest written by an earlier run
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides PHASESPACE_OUT and the config file)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a generalized bracket or a single D^k term
    Bracket(BracketArgs),
    /// Tabulate the sawtooth functions or the energy spectral densities
    Spectra(SpectraArgs),
    /// Sign of <g_H(E_2), rho_G> over a (sigma_q, sigma_p) grid
    Scan(ScanArgs),
    /// Ground-state width and its energy and radius checks
    Ground(GroundArgs),
    /// Largest magnetic quantum number supported per level
    Zeeman(ZeemanArgs),
    /// Evolve the oscillator ground state under the wedge-driven quartic potential
    Evolve(EvolveArgs),
    /// Level probabilities under the resonant field, with the quantum comparison
    Excite(ExciteArgs),
    /// Monte Carlo Coulomb cross-section
    Scatter(ScatterArgs),
    /// Run the acceptance checks
    Verify(VerifyArgs),
}

/// A failure with its exit code: 1 for bad input, 2 for numerical trouble.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn domain(msg: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: msg.to_string(),
        }
    }

    pub fn numeric(msg: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: msg.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let name = match &cli.command {
        Command::Bracket(_) => "bracket",
        Command::Spectra(_) => "spectra",
        Command::Scan(_) => "scan",
        Command::Ground(_) => "ground",
        Command::Zeeman(_) => "zeeman",
        Command::Evolve(_) => "evolve",
        Command::Excite(_) => "excite",
        Command::Scatter(_) => "scatter",
        Command::Verify(_) => "verify",
    };
    let file = match &cli.config {
        Some(path) => config::load(path, name)?,
        None => config::FileConfig::default(),
    };
    let env_out = std::env::var_os("PHASESPACE_OUT").map(PathBuf::from);
    let out_dir = cli
        .out
        .or(env_out)
        .or(file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::domain(format!("thread pool: {e}")))?;
    let mut ctx = emit::RunContext::new(name, out_dir, threads)?;
    let table = file.table;
    match cli.command {
        Command::Bracket(a) => commands::bracket(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Spectra(a) => commands::spectra(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Scan(a) => commands::scan(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Ground(a) => commands::ground(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Zeeman(a) => commands::zeeman(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Evolve(a) => commands::evolve(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Excite(a) => commands::excite(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Scatter(a) => commands::scatter(config::resolve(&a, table.as_ref())?, &mut ctx),
        Command::Verify(a) => commands::verify(config::resolve(&a, table.as_ref())?, &mut ctx),
    }
}
