//! `cmcface`: scans, solves, classifies, meshes and verifies genus-one
//! CMC-1 faces in de Sitter 3-space.
//!
//! Exit codes: 0 success, 1 verification checks failed, 2 bad flags,
//! 3 integration failure, 4 not admissible or pole, 5 SU(1,1) verification
//! failed, 6 resonant exponent, 7 eigenvalue mismatch, 8 I/O.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod io;

use clap::{Args, Parser, Subcommand};
use cmcface_core::{Error, IntegratorConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Invalid command-line input.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Some `verify` checks did not pass.
#[derive(Debug)]
pub struct Failure(pub String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failure {}

#[derive(Parser)]
#[command(name = "cmcface", version, about = "Genus-one CMC-1 faces in de Sitter 3-space")]
struct Cli {
    #[command(flatten)]
    integrator: IntegratorFlags,
    #[command(subcommand)]
    command: Command,
}

/// Integrator settings: defaults, then the config file, then these flags.
#[derive(Args)]
struct IntegratorFlags {
    /// `key = value` file with rel_tol, abs_tol, max_steps, initial_step.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    max_steps: Option<usize>,
}

impl IntegratorFlags {
    fn resolve(&self) -> anyhow::Result<IntegratorConfig> {
        let mut cfg = commands::load_config(self.config.as_ref())?;
        cfg.rel_tol = self.rel_tol.unwrap_or(cfg.rel_tol);
        cfg.abs_tol = self.abs_tol.unwrap_or(cfg.abs_tol);
        cfg.max_steps = self.max_steps.unwrap_or(cfg.max_steps);
        cfg.validate().map_err(|e| Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate f1, f2 over a c-grid and report the sign changes of f1 - f2.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        c_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        c_max: f64,
        #[arg(long, default_value_t = 2600)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine a crossing, solve the gauge and verify closure.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        c0: f64,
        #[arg(long, allow_hyphen_values = true)]
        c1: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol_c: f64,
        /// Write the solution record here instead of standard output.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Indicial exponent and end type, checked against the end-loop monodromy.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        json: bool,
    },
    /// Sample the surface near the root closest to c and export it.
    Mesh {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 16)]
        nu: usize,
        #[arg(long, default_value_t = 16)]
        nv: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = commands::MeshFormat::Obj)]
        format: commands::MeshFormat,
        /// Also write the symmetry curves (y2 = 0) as CSV polylines.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Run the invariant suite at (a, c).
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        /// Add fixed-step reference integrations at ten times the resolution.
        #[arg(long)]
        deep: bool,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    if err.downcast_ref::<Failure>().is_some() {
        return 1;
    }
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::InvalidInput(_) | Error::LostBracket { .. } => 2,
            Error::NotAdmissible { .. } | Error::PoleBracket { .. } | Error::Pole => 4,
            Error::VerificationFailed { .. } | Error::NotInSu11 { .. } => 5,
            Error::ResonantExponent { .. } => 6,
            Error::EigenvalueMismatch { .. } => 7,
            _ => 3,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 8;
    }
    3
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = cli.integrator.resolve()?;
    match cli.command {
        Command::Scan { a, c_min, c_max, steps, out } => commands::scan(a, c_min, c_max, steps, out, &cfg),
        Command::Solve { a, c0, c1, tol_c, json } => commands::solve_cmd(a, c0, c1, tol_c, json, &cfg),
        Command::Classify { a, c, json } => commands::classify(a, c, json),
        Command::Mesh { a, c, nu, nv, out, format, curves } => {
            commands::mesh(commands::MeshArgs { a, c, nu, nv, out, format, curves }, &cfg)
        }
        Command::Verify { a, c, deep } => commands::verify(a, c, deep, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
