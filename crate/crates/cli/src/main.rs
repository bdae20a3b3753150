//! `liespinor` command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver non-convergence, 4 I/O.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liespinor::Error;

use config::{FileConfig, RunConfig};

#[derive(Parser)]
#[command(name = "liespinor", version, about = "Spinor representation of surfaces in 3-dimensional Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure constants, Levi-Civita connection and sectional curvatures.
    Algebra(Common),
    /// Integrate a spinor CSV into the group; writes an OBJ mesh and residuals.
    Reconstruct {
        /// Spinor field CSV.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// CMC spheres of revolution in Nil for a list of pole slopes.
    CmcSweep(Common),
    /// Run one of the solvers.
    Solve {
        solver: Solver,
        /// Right-hand side of the minimal system.
        #[arg(long, value_enum, default_value_t = Form::Dirac)]
        form: Form,
        #[command(flatten)]
        common: Common,
    },
    /// Spinor energy, geometric energy and Willmore functional.
    Energy {
        /// Spinor field CSV; omit and pass `--k` for a Nil CMC sphere.
        input: Option<PathBuf>,
        /// Euler characteristic of the surface, when known.
        #[arg(long, allow_negative_numbers = true)]
        chi: Option<i32>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Solver {
    Minimal,
    SinhGordon,
    Berdinsky,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Form {
    Dirac,
    Printed,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ambient geometry: r3, su2, nil, sl2r, sol, gmu (with --mu) or gmu:<mu>.
    #[arg(long)]
    group: Option<String>,
    /// Bianchi type (I .. IX, VI_a, VII_a, or a name such as nil).
    #[arg(long = "type")]
    ty: Option<String>,
    /// Parameter of VI_a / VII_a.
    #[arg(long)]
    a: Option<f64>,
    /// G_mu parameter; a comma-separated list runs a continuation sweep.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mu: Option<Vec<f64>>,
    /// Bracket scale factor.
    #[arg(long)]
    scale: Option<f64>,
    /// Basis of the printed constants: table or weierstrass.
    #[arg(long)]
    basis: Option<String>,
    /// Samples per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial field (constant, zero, plane, cos) or an integer RNG seed.
    #[arg(long)]
    seed: Option<String>,
    /// Pole slopes, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    /// Holomorphic coefficient of the Berdinsky equation: `re` or `re,im`.
    #[arg(long = "B", alias = "b", allow_hyphen_values = true)]
    b: Option<String>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(self) -> liespinor::Result<RunConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let flags = FileConfig {
            group: self.group,
            ty: self.ty,
            a: self.a,
            mu: self.mu,
            scale: self.scale,
            basis: self.basis,
            grid: self.grid,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            out: self.out,
            seed: self.seed,
            k: self.k,
            b: self.b,
            threads: self.threads,
        };
        RunConfig::merge(flags, file)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) | Error::BlowUp(_) => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> liespinor::Result<()> {
    match cli.command {
        Command::Algebra(c) => commands::algebra(&c.resolve()?),
        Command::Reconstruct { input, common } => commands::reconstruct(&common.resolve()?, &input),
        Command::CmcSweep(c) => commands::cmc_sweep(&c.resolve()?),
        Command::Solve { solver, form, common } => commands::solve(&common.resolve()?, solver, form),
        Command::Energy { input, chi, common } => commands::energy(&common.resolve()?, input.as_deref(), chi),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
