use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use super::config::{ProviderKind, RunConfig};
use super::io;
use crate::analysis;
use crate::control::{self, RunOptions, RunTrace};
use crate::dp::{self, DpTables, ExtendedTime, RateGrid, TableMeta, TransitionSource};
use crate::error::{Error, Result};
use crate::montecarlo::MonteCarloProvider;
use crate::oracle;
use crate::problems::Problem;
use crate::rng;

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn source(cfg: &RunConfig) -> TransitionSource {
    match cfg.provider {
        ProviderKind::MonteCarlo => TransitionSource::MonteCarlo(cfg.mc),
        ProviderKind::Exact => TransitionSource::Exact,
    }
}

fn table_meta(cfg: &RunConfig) -> TableMeta {
    TableMeta {
        problem: cfg.problem.clone(),
        n: cfg.n,
        lambda: cfg.lambda,
        source: source(cfg),
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub tables: DpTables,
    pub lower_bound: ExtendedTime,
    pub tables_path: PathBuf,
    pub optimal_path: PathBuf,
}

/// Solves the level DP with the configured transition provider and writes
/// `tables.csv` and `optimal.csv`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveOutput> {
    let problem = cfg.benchmark()?;
    let (f_min, f_max) = problem.fitness_range();
    let grid = RateGrid::build(&cfg.grid, f_min, f_max)?;
    info!(
        "solving {} n={} lambda={} over {} rates with {:?} transitions",
        cfg.problem,
        cfg.n,
        cfg.lambda,
        grid.rates(f_min).len(),
        cfg.provider
    );
    let tables = pool(cfg.workers)?.install(|| match cfg.provider {
        ProviderKind::MonteCarlo => {
            let provider = MonteCarloProvider::new(&problem, cfg.mc)?;
            dp::solve(&problem, &grid, cfg.lambda, &provider, source(cfg))
        }
        ProviderKind::Exact => oracle::solve_exact(&problem, &grid, cfg.lambda),
    })?;
    let lower_bound = analysis::lower_bound_for(&problem, &tables)?;
    let tables_path = cfg.out_dir.join("tables.csv");
    let optimal_path = cfg.out_dir.join("optimal.csv");
    io::write_tables(&tables_path, &tables)?;
    io::write_optimal(&optimal_path, &tables)?;
    info!("wrote {} and {}", tables_path.display(), optimal_path.display());
    Ok(SolveOutput {
        tables,
        lower_bound,
        tables_path,
        optimal_path,
    })
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub traces: Vec<RunTrace>,
    pub mean_iterations: f64,
    pub stderr: f64,
    pub exhausted: usize,
}

/// Runs the EA `cfg.runs` times with per-run random streams and writes
/// `trace.csv` and `runs.csv`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let problem = cfg.benchmark()?;
    let policy = cfg.policy.build(cfg.n)?;
    info!(
        "simulating {} runs of the {} policy on {} n={} lambda={}",
        cfg.runs, cfg.policy.kind, cfg.problem, cfg.n, cfg.lambda
    );
    let traces = pool(cfg.workers)?.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run_id| {
                control::run_ea_with(
                    &problem,
                    cfg.lambda,
                    policy.clone(),
                    RunOptions::with_budget(cfg.budget),
                    &mut rng::run_stream(cfg.seed, run_id),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    io::write_traces(&cfg.out_dir.join("trace.csv"), &traces)?;
    io::write_runs(&cfg.out_dir.join("runs.csv"), &traces)?;
    let finished: Vec<f64> = traces
        .iter()
        .filter(|t| t.status.reached_optimum())
        .map(|t| t.status.iterations() as f64)
        .collect();
    let (mean_iterations, stderr) = control::mean_and_stderr(&finished);
    Ok(SimulateOutput {
        exhausted: traces.len() - finished.len(),
        traces,
        mean_iterations,
        stderr,
    })
}

pub fn load_tables(cfg: &RunConfig, path: &Path) -> Result<DpTables> {
    let problem = cfg.benchmark()?;
    io::read_tables(path, &problem, table_meta(cfg))
}

/// Regret of every traced iteration against the tables; writes `regret.csv`.
pub fn cmd_regret(
    cfg: &RunConfig,
    tables_path: &Path,
    trace_path: &Path,
) -> Result<Vec<(usize, Vec<analysis::RegretPoint>)>> {
    let tables = load_tables(cfg, tables_path)?;
    let f_max = tables.fitness_range().1;
    let runs = io::read_traces(trace_path, f_max)?
        .into_iter()
        .map(|(run_id, trace)| Ok((run_id, analysis::regret_trace(&trace, &tables)?)))
        .collect::<Result<Vec<_>>>()?;
    io::write_regret(&cfg.out_dir.join("regret.csv"), &runs)?;
    Ok(runs)
}

pub fn cmd_heatmap(cfg: &RunConfig, tables_path: &Path) -> Result<Vec<analysis::HeatmapCell>> {
    let tables = load_tables(cfg, tables_path)?;
    let cells = analysis::heatmap(&tables);
    io::write_heatmap(&cfg.out_dir.join("heatmap.csv"), &cells)?;
    Ok(cells)
}

pub fn cmd_lowerbound(cfg: &RunConfig, tables_path: &Path) -> Result<ExtendedTime> {
    let tables = load_tables(cfg, tables_path)?;
    let bound = analysis::lower_bound_for(&cfg.benchmark()?, &tables)?;
    io::write_lower_bound(&cfg.out_dir.join("lowerbound.csv"), tables.meta(), bound)?;
    Ok(bound)
}
