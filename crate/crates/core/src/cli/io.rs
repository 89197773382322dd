//! CSV readers and writers for tables, traces and derived artifacts.
//!
//! All files have a header row, LF line endings and `.` decimals. Infinite
//! times are written as `inf`.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::analysis::{HeatmapCell, RegretPoint};
use crate::control::{IterationRecord, RunStatus, RunTrace};
use crate::dp::{DpTables, ExtendedTime, RateGrid, TableMeta};
use crate::error::{Error, Result};
use crate::problems::Problem;

/// Shortest round-trip decimal; scientific notation outside `[1e-5, 1e16)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:e}")
    }
}

fn fmt_time(t: ExtendedTime) -> String {
    fmt_f64(t.value())
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Schema {
            path: path.display().to_string(),
            message: format!("{other:?}"),
        },
    }
}

fn finish(mut w: csv::Writer<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

macro_rules! row {
    ($w:expr, $path:expr, $($field:expr),+ $(,)?) => {
        $w.write_record(&[$($field.to_string()),+]).map_err(|e| csv_error($path, e))?
    };
}

pub fn write_tables(path: &Path, tables: &DpTables) -> Result<()> {
    let lambda = tables.meta().lambda as f64;
    let mut w = writer(path)?;
    row!(w, path, "fitness", "rate", "T_iterations", "T_evaluations");
    let (f_min, f_max) = tables.fitness_range();
    for f in f_min..f_max {
        for (&t, &p) in tables.row(f)?.iter().zip(tables.grid().rates(f)) {
            row!(w, path, f, fmt_f64(p), fmt_time(t), fmt_time(t * lambda));
        }
    }
    finish(w)
}

pub fn write_optimal(path: &Path, tables: &DpTables) -> Result<()> {
    let lambda = tables.meta().lambda as f64;
    let mut w = writer(path)?;
    row!(w, path, "fitness", "T_star_iterations", "p_opt", "T_star_evaluations");
    let (f_min, f_max) = tables.fitness_range();
    for f in f_min..=f_max {
        let t = tables.t_star(f)?;
        let p = tables.p_opt(f)?.map(fmt_f64).unwrap_or_default();
        row!(w, path, f, fmt_time(t), p, fmt_time(t * lambda));
    }
    finish(w)
}

pub fn write_lower_bound(path: &Path, meta: &TableMeta, bound: ExtendedTime) -> Result<()> {
    let mut w = writer(path)?;
    row!(w, path, "problem", "n", "lambda", "T_iterations", "T_evaluations");
    row!(
        w,
        path,
        meta.problem,
        meta.n,
        meta.lambda,
        fmt_time(bound),
        fmt_time(bound * meta.lambda as f64)
    );
    finish(w)
}

pub fn write_heatmap(path: &Path, cells: &[HeatmapCell]) -> Result<()> {
    let mut w = writer(path)?;
    row!(w, path, "fitness", "rate", "C", "alpha_f", "T");
    for c in cells {
        row!(
            w,
            path,
            c.fitness,
            fmt_f64(c.rate),
            fmt_f64(c.efficiency),
            fmt_f64(c.alpha),
            fmt_time(c.time)
        );
    }
    finish(w)
}

pub fn write_traces(path: &Path, traces: &[RunTrace]) -> Result<()> {
    let mut w = writer(path)?;
    row!(
        w,
        path,
        "run_id",
        "iteration",
        "fitness",
        "rate",
        "best_offspring_fitness",
        "success"
    );
    for (run_id, trace) in traces.iter().enumerate() {
        for r in &trace.records {
            row!(
                w,
                path,
                run_id,
                r.iteration,
                r.fitness,
                fmt_f64(r.rate),
                r.best_offspring_fitness,
                r.success
            );
        }
    }
    finish(w)
}

pub fn write_runs(path: &Path, traces: &[RunTrace]) -> Result<()> {
    let mut w = writer(path)?;
    row!(w, path, "run_id", "iterations_to_optimum");
    for (run_id, trace) in traces.iter().enumerate() {
        let value = match trace.status {
            RunStatus::Optimum { iterations } => iterations.to_string(),
            RunStatus::BudgetExhausted { .. } => "budget_exhausted".to_string(),
        };
        row!(w, path, run_id, value);
    }
    finish(w)
}

pub fn write_regret(path: &Path, runs: &[(usize, Vec<RegretPoint>)]) -> Result<()> {
    let mut w = writer(path)?;
    row!(
        w,
        path,
        "run_id",
        "iteration",
        "fitness",
        "rate",
        "mapped_rate",
        "regret",
        "infinite"
    );
    for (run_id, points) in runs {
        for p in points {
            row!(
                w,
                path,
                run_id,
                p.iteration,
                p.fitness,
                fmt_f64(p.rate),
                fmt_f64(p.mapped_rate),
                fmt_time(p.regret),
                p.infinite()
            );
        }
    }
    finish(w)
}

/// Column lookup by header name, with errors naming the file and column.
struct Columns<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
}

impl<'a> Columns<'a> {
    fn new(path: &'a Path, headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let index: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        for &name in required {
            if !index.contains_key(name) {
                return Err(Error::Schema {
                    path: path.display().to_string(),
                    message: format!("missing column '{name}'"),
                });
            }
        }
        Ok(Self { path, index })
    }

    fn get<T: std::str::FromStr>(&self, rec: &csv::StringRecord, name: &str) -> Result<T> {
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let raw = rec.get(self.index[name]).ok_or_else(|| Error::Schema {
            path: self.path.display().to_string(),
            message: format!("line {line}: column '{name}' is missing"),
        })?;
        raw.trim().parse().map_err(|_| Error::Schema {
            path: self.path.display().to_string(),
            message: format!("line {line}: column '{name}' has invalid value '{raw}'"),
        })
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

/// Reads `tables.csv` back into [`DpTables`] for `problem`.
pub fn read_tables<P: Problem + ?Sized>(
    path: &Path,
    problem: &P,
    meta: TableMeta,
) -> Result<DpTables> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(path, &headers, &["fitness", "rate", "T_iterations"])?;
    let (f_min, f_max) = problem.fitness_range();
    let levels = (f_max - f_min) as usize;
    let mut rates = vec![Vec::new(); levels];
    let mut times = vec![Vec::new(); levels];
    let schema = |message: String| Error::Schema {
        path: path.display().to_string(),
        message,
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let f: i64 = cols.get(&rec, "fitness")?;
        if f < f_min || f >= f_max {
            return Err(schema(format!(
                "column 'fitness': value {f} outside [{f_min}..{f_max})"
            )));
        }
        let level = (f - f_min) as usize;
        rates[level].push(cols.get::<f64>(&rec, "rate")?);
        times[level].push(cols.get::<ExtendedTime>(&rec, "T_iterations")?);
    }
    for (i, row) in rates.iter().enumerate() {
        if row.is_empty() {
            return Err(schema(format!(
                "column 'fitness': no rows for fitness {}",
                f_min + i as i64
            )));
        }
        if row.windows(2).any(|w| w[0] >= w[1]) {
            return Err(schema(format!(
                "column 'rate': rates for fitness {} are not strictly increasing",
                f_min + i as i64
            )));
        }
    }
    let grid = RateGrid::from_rows(f_min, rates)?;
    DpTables::from_times(meta, f_min, f_max, grid, times)
}

/// Reads `trace.csv`; runs are returned in order of first appearance.
pub fn read_traces(path: &Path, f_max: i64) -> Result<Vec<(usize, RunTrace)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let required = [
        "run_id",
        "iteration",
        "fitness",
        "rate",
        "best_offspring_fitness",
        "success",
    ];
    let cols = Columns::new(path, &headers, &required)?;
    let mut runs: Vec<(usize, Vec<IterationRecord>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let run_id: usize = cols.get(&rec, "run_id")?;
        let record = IterationRecord {
            iteration: cols.get(&rec, "iteration")?,
            fitness: cols.get(&rec, "fitness")?,
            rate: cols.get(&rec, "rate")?,
            best_offspring_fitness: cols.get(&rec, "best_offspring_fitness")?,
            success: cols.get(&rec, "success")?,
        };
        match runs.last_mut() {
            Some((id, records)) if *id == run_id => records.push(record),
            _ => runs.push((run_id, vec![record])),
        }
    }
    Ok(runs
        .into_iter()
        .map(|(run_id, records)| {
            let iterations = records.len() as u64;
            let done = records
                .last()
                .is_some_and(|r| r.best_offspring_fitness >= f_max);
            let status = if done {
                RunStatus::Optimum { iterations }
            } else {
                RunStatus::BudgetExhausted { iterations }
            };
            let initial_fitness = records.first().map(|r| r.fitness).unwrap_or(f_max);
            (
                run_id,
                RunTrace {
                    initial_fitness,
                    records,
                    status,
                },
            )
        })
        .collect())
}

/// Writes a one-line machine-readable summary.
pub fn print_summary<W: Write>(out: &mut W, pairs: &[(&str, String)]) -> Result<()> {
    let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "{}", line.join(" "))?;
    Ok(())
}
