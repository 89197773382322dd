//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid configuration or arguments, 3 for
//! failures while running.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::control::PolicyKind;
use crate::error::Error;
use config::{ConfigFile, Overrides, ProviderKind, RateValue, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lambda-dp", version, about = "Optimal mutation rates and runtime lower bounds for (1+λ) EAs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML key-value configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// `onemax` or `ruggedness`.
    #[arg(long, global = true)]
    pub problem: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub lambda: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `mc` or `exact`.
    #[arg(long)]
    pub provider: Option<String>,
    /// Monte Carlo iteration cap `N_I`.
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Monte Carlo success target `N_T`.
    #[arg(long)]
    pub successes: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `static`, `ab` or `two-rate`.
    #[arg(long)]
    pub policy: Option<String>,
    /// Rate of the static policy (number, `1/n` or `1/n^2`).
    #[arg(long)]
    pub rate: Option<RateValue>,
    #[arg(long)]
    pub p_min: Option<RateValue>,
    #[arg(long)]
    pub p_max: Option<RateValue>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TablesArg {
    /// Defaults to `<out-dir>/tables.csv`.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level DP with Monte Carlo transitions (or `--provider exact`).
    Solve(SolveArgs),
    /// Level DP with exact transitions.
    SolveExact,
    /// Run the EA under a control policy and record traces.
    Simulate(SimulateArgs),
    /// Per-iteration regret of recorded traces.
    Regret {
        #[command(flatten)]
        tables: TablesArg,
        /// Defaults to `<out-dir>/trace.csv`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Parameter efficiency heatmap.
    Heatmap(TablesArg),
    /// Runtime lower bound from the optimal times.
    Lowerbound(TablesArg),
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidGrid(_)
        | Error::InvalidRate(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    let file = match &cli.global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let g = &cli.global;
    let mut ov = Overrides {
        seed: g.seed,
        workers: g.workers,
        out_dir: g.out_dir.clone(),
        problem: g.problem.clone(),
        n: g.n,
        lambda: g.lambda,
        ..Default::default()
    };
    match &cli.command {
        Command::Solve(a) => {
            ov.provider = a.provider.as_deref().map(str::parse).transpose()?;
            ov.iterations = a.iterations;
            ov.successes = a.successes;
        }
        Command::SolveExact => ov.provider = Some(ProviderKind::Exact),
        Command::Simulate(a) => {
            ov.policy = a
                .policy
                .as_deref()
                .map(str::parse::<PolicyKind>)
                .transpose()
                .map_err(|e| Error::Config(e.to_string()))?;
            ov.rate = a.rate.clone();
            ov.p_min = a.p_min.clone();
            ov.p_max = a.p_max.clone();
            ov.runs = a.runs;
            ov.budget = a.budget;
        }
        _ => {}
    }
    RunConfig::resolve(file, ov)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    let default_tables = || cfg.out_dir.join("tables.csv");
    match &cli.command {
        Command::Solve(_) | Command::SolveExact => {
            let res = commands::cmd_solve(cfg)?;
            io::print_summary(
                &mut out,
                &[
                    ("problem", cfg.problem.clone()),
                    ("n", cfg.n.to_string()),
                    ("lambda", cfg.lambda.to_string()),
                    ("lower_bound_iterations", res.lower_bound.to_string()),
                    (
                        "lower_bound_evaluations",
                        (res.lower_bound * cfg.lambda as f64).to_string(),
                    ),
                ],
            )
        }
        Command::Simulate(_) => {
            let res = commands::cmd_simulate(cfg)?;
            io::print_summary(
                &mut out,
                &[
                    ("policy", cfg.policy.kind.to_string()),
                    ("runs", res.traces.len().to_string()),
                    ("mean_iterations", res.mean_iterations.to_string()),
                    ("stderr", res.stderr.to_string()),
                    ("budget_exhausted", res.exhausted.to_string()),
                ],
            )
        }
        Command::Regret { tables, trace } => {
            let tables = tables.tables.clone().unwrap_or_else(default_tables);
            let trace = trace.clone().unwrap_or_else(|| cfg.out_dir.join("trace.csv"));
            let runs = commands::cmd_regret(cfg, &tables, &trace)?;
            let points: usize = runs.iter().map(|(_, p)| p.len()).sum();
            io::print_summary(
                &mut out,
                &[("runs", runs.len().to_string()), ("points", points.to_string())],
            )
        }
        Command::Heatmap(t) => {
            let tables = t.tables.clone().unwrap_or_else(default_tables);
            let cells = commands::cmd_heatmap(cfg, &tables)?;
            io::print_summary(&mut out, &[("cells", cells.len().to_string())])
        }
        Command::Lowerbound(t) => {
            let tables = t.tables.clone().unwrap_or_else(default_tables);
            let bound = commands::cmd_lowerbound(cfg, &tables)?;
            io::print_summary(
                &mut out,
                &[
                    ("lower_bound_iterations", bound.to_string()),
                    (
                        "lower_bound_evaluations",
                        (bound * cfg.lambda as f64).to_string(),
                    ),
                ],
            )
        }
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cli, &cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
