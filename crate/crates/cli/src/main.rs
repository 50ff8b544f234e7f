//! `nonloc`: batch driver for nonlocal operators, minimization, semilinear
//! solves, integrand audits and the bundled presets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files (exit 2).
    Usage(String),
    /// Failure after validation succeeded (exit 1).
    Run(String),
}

impl From<nonloc_core::Error> for CliError {
    fn from(e: nonloc_core::Error) -> Self {
        use nonloc_core::Error as E;
        match e {
            E::Inversion { .. } | E::NonFinite { .. } | E::Precondition(_) | E::Input(_) => CliError::Run(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nonloc", version, about = "Nonlocal variational problems on a one-dimensional grid")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "NONLOC_THREADS")]
    threads: Option<usize>,
    /// Random seed (overrides `solver.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply a nonlocal operator to a grid function.
    Apply(ApplyArgs),
    /// Minimize a preset's energy by projected steepest descent.
    Minimize,
    /// Solve a semilinear equation by fixed-point iteration.
    Semilinear,
    /// Residuals of a candidate solution.
    Residual {
        /// Solution CSV (`x,u1`).
        #[arg(long)]
        u: PathBuf,
    },
    /// Sampled audit of a preset integrand.
    Check {
        which: CheckKind,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Bundled problems.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Young bound and least-squares demonstration for `u∗μ = h`.
    DemoIllposed {
        /// Grid levels for the forced-norm sequence.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

#[derive(clap::Args, Debug)]
pub struct ApplyArgs {
    operator: Operator,
    /// Grid function CSV (`x,u1[,…]`).
    #[arg(long)]
    u: Option<PathBuf>,
    /// Two-point field CSV (`i,j,value`), for `divergence`.
    #[arg(long)]
    field: Option<PathBuf>,
    /// `a,b,collar_width,node_count`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// `gaussian[:σ]`, `constant:value:horizon`, `table:path` or `two_point:path`.
    #[arg(long)]
    kernel: Option<String>,
    /// Exponent for `p_laplacian`.
    #[arg(long)]
    p: Option<f64>,
    /// Use the FFT path for `convolve`.
    #[arg(long)]
    fft: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Operator {
    Gradient,
    Divergence,
    Laplacian,
    PLaplacian,
    Convolve,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CheckKind {
    Convexity,
    Coercivity,
    Growth,
}

#[derive(Subcommand, Debug)]
enum PresetAction {
    List,
    Describe { name: String },
    Run { name: String },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    match cli.command {
        Command::Apply(args) => commands::apply(&args, cfg),
        Command::Minimize => commands::minimize(cfg),
        Command::Semilinear => commands::semilinear(cfg),
        Command::Residual { u } => commands::residual(cfg, &u),
        Command::Check { which, preset, trials } => commands::check(cfg, which, preset, trials),
        Command::Preset { action } => match action {
            PresetAction::List => commands::preset_list(cfg),
            PresetAction::Describe { name } => commands::preset_describe(cfg, &name),
            PresetAction::Run { name } => commands::preset_run(cfg, &name),
        },
        Command::DemoIllposed { levels } => commands::demo_illposed(cfg, levels),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
