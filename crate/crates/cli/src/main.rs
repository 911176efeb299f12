//! `qlab`: solve, audit and inspect Landau-de Gennes Q-tensor fields.
//!
//! Exit status: 0 on success, 2 for invalid input or configuration, 3 when a
//! solver does not converge (outputs are still written).

mod commands;
mod config;
mod plot;
mod presets;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "qlab",
    version,
    about = "Q-tensor equilibria laboratory",
    after_help = "Any subcommand accepts --config FILE: a `key = value` file whose keys are flag names. Explicit flags take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relax the full tensor field to an equilibrium.
    Solve(SolveArgs),
    /// Relax the uniaxial (s, n) system.
    SolveSn(SolveSnArgs),
    /// Solve the radial hedgehog profile, optionally lifted to a ball.
    Hedgehog(HedgehogArgs),
    /// Biaxiality, director constancy, symmetry and boundary diagnostics.
    Audit(AuditArgs),
    /// Nodewise spectral decomposition of a field file.
    Decompose(DecomposeArgs),
    /// SVG plot of s, beta or the director angle.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainKind {
    Interval,
    Rectangle,
    Disk,
    Ball,
}

#[derive(Args, Debug, Clone)]
pub struct DomainArgs {
    #[arg(long, value_enum)]
    pub domain: DomainKind,
    /// Grid spacing.
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lx: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ly: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
}

#[derive(Args, Debug, Clone)]
pub struct MaterialArgs {
    /// Quartic bulk coefficients `a,b,c`.
    #[arg(long, default_value = "1,1,1")]
    pub bulk: String,
    /// Elastic constant.
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,
    /// explicit or semi-implicit.
    #[arg(long, default_value = "explicit")]
    pub scheme: String,
    #[arg(long, default_value_t = 0.9)]
    pub dt_safety: f64,
}

#[derive(Args, Debug, Clone)]
pub struct BcArgs {
    /// hybrid-orthogonal, hybrid-parallel(angle) or radial(s0).
    #[arg(long)]
    pub bc: String,
    /// Boundary order parameter (default: the preferred value of the bulk).
    #[arg(long)]
    pub s0: Option<f64>,
    /// Plate angle of hybrid-parallel, in radians.
    #[arg(long)]
    pub angle: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub material: MaterialArgs,
    #[command(flatten)]
    pub bc: BcArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Field CSV.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Report JSON.
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SolveSnArgs {
    #[command(flatten)]
    pub base: SolveArgs,
    /// CSV of the extra-equation residual.
    #[arg(long)]
    pub extra_residual: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct HedgehogArgs {
    #[arg(long)]
    pub s0: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 512)]
    pub nodes: usize,
    /// shooting or collocation.
    #[arg(long, default_value = "shooting")]
    pub method: String,
    #[command(flatten)]
    pub material: MaterialArgs,
    /// Profile CSV (r, s, residual).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Ball field CSV of the lifted profile.
    #[arg(long)]
    pub lift: Option<std::path::PathBuf>,
    /// Spacing of the lift grid (default R/16).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct AuditArgs {
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,
    /// CSV of x, y, z, beta, phase.
    #[arg(long)]
    pub beta_map: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub material: MaterialArgs,
    /// Boundary order parameter for the boundary relation (default: mean
    /// over the boundary).
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub angle_tol: f64,
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    #[arg(long, value_enum, default_value = "s")]
    pub quantity: plot::Quantity,
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("QLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow::anyhow!("QLAB_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(2),
            };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::SolveSn(a) => commands::solve_sn(&a),
        Command::Hedgehog(a) => commands::hedgehog(&a),
        Command::Audit(a) => commands::audit(&a),
        Command::Decompose(a) => commands::decompose(&a),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if closed_pipe(f.error()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

/// Output piped into a reader that quit early (`qlab decompose ... | head`).
fn closed_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| {
            match c.downcast_ref::<qlab_core::Error>() {
                Some(qlab_core::Error::Io(io)) => Some(io),
                _ => None,
            }
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
