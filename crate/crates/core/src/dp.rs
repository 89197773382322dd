//! Backward dynamic programming over fitness levels.
//!
//! For an elitist algorithm the expected remaining time at level `f` depends
//! only on the optimal times of strictly better levels, so levels are solved
//! from `f_max − 1` down to `f_min`. Within a level, every grid rate is an
//! independent cell.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::montecarlo::{McConfig, TransitionDistribution};
use crate::problems::Problem;

/// Relative tolerance under which two times count as tied in the row minimum.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Tolerance on `Σ p̃_i = 1` accepted by [`expected_time`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A nonnegative number of iterations, or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedTime(f64);

impl ExtendedTime {
    pub const ZERO: ExtendedTime = ExtendedTime(0.0);
    pub const INFINITY: ExtendedTime = ExtendedTime(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid time {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `|self − other|`; infinite if either side is.
    pub fn abs_diff(self, other: ExtendedTime) -> ExtendedTime {
        if self.is_infinite() || other.is_infinite() {
            ExtendedTime::INFINITY
        } else {
            ExtendedTime((self.0 - other.0).abs())
        }
    }
}

impl Eq for ExtendedTime {}

impl PartialOrd for ExtendedTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for ExtendedTime {
    type Output = ExtendedTime;

    fn add(self, rhs: ExtendedTime) -> ExtendedTime {
        ExtendedTime(self.0 + rhs.0)
    }
}

/// Scaling by a nonnegative factor; a zero factor yields zero even for `+∞`.
impl Mul<f64> for ExtendedTime {
    type Output = ExtendedTime;

    fn mul(self, rhs: f64) -> ExtendedTime {
        debug_assert!(rhs >= 0.0);
        if rhs == 0.0 {
            ExtendedTime::ZERO
        } else {
            ExtendedTime(self.0 * rhs)
        }
    }
}

impl fmt::Display for ExtendedTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for ExtendedTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(ExtendedTime::INFINITY);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse time '{s}'")))?;
        ExtendedTime::new(v)
    }
}

/// `p_i = base · alpha^i` for `i ∈ [0..count)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplicativeGrid {
    pub base: f64,
    pub alpha: f64,
    pub count: usize,
}

/// `p_i = base + i · step` for `i ∈ [0..count)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveGrid {
    pub base: f64,
    pub step: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub multiplicative: Option<MultiplicativeGrid>,
    pub additive: Option<AdditiveGrid>,
}

impl Default for GridSpec {
    /// `10^(−4 + i/25)` for `i ∈ [0..100]`.
    fn default() -> Self {
        Self {
            multiplicative: Some(MultiplicativeGrid {
                base: 1e-4,
                alpha: 10f64.powf(1.0 / 25.0),
                count: 101,
            }),
            additive: None,
        }
    }
}

impl GridSpec {
    /// The sorted, deduplicated union of the configured grids.
    pub fn rates(&self) -> Result<Vec<f64>> {
        let mut rates = Vec::new();
        if let Some(m) = self.multiplicative {
            rates.extend((0..m.count).map(|i| m.base * m.alpha.powi(i as i32)));
        }
        if let Some(a) = self.additive {
            rates.extend((0..a.count).map(|i| a.base + i as f64 * a.step));
        }
        normalize_rates(rates)
    }
}

fn normalize_rates(mut rates: Vec<f64>) -> Result<Vec<f64>> {
    for p in rates.iter_mut() {
        // absorb rounding in base·alpha^i at the top of the range
        if *p > 1.0 && *p <= 1.0 + 1e-9 {
            *p = 1.0;
        }
        if !(*p > 0.0 && *p <= 1.0) {
            return Err(Error::InvalidGrid(format!("rate {p} is outside (0, 1]")));
        }
    }
    rates.sort_by(f64::total_cmp);
    rates.dedup_by(|b, a| (*b - *a).abs() <= TIE_TOLERANCE * a.abs());
    if rates.is_empty() {
        return Err(Error::InvalidGrid("no rates".into()));
    }
    Ok(rates)
}

/// Candidate rates per non-optimal fitness level, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    f_min: i64,
    rows: Vec<Vec<f64>>,
}

impl RateGrid {
    /// Same rates for every level in `[f_min..f_max)`.
    pub fn build(spec: &GridSpec, f_min: i64, f_max: i64) -> Result<Self> {
        Self::uniform(spec.rates()?, f_min, f_max)
    }

    pub fn uniform(rates: Vec<f64>, f_min: i64, f_max: i64) -> Result<Self> {
        let rates = normalize_rates(rates)?;
        let levels = (f_max - f_min).max(0) as usize;
        Ok(Self {
            f_min,
            rows: vec![rates; levels],
        })
    }

    /// Per-level rates; `rows[i]` belongs to fitness `f_min + i`.
    pub fn from_rows(f_min: i64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(normalize_rates)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { f_min, rows })
    }

    pub fn f_min(&self) -> i64 {
        self.f_min
    }

    pub fn levels(&self) -> usize {
        self.rows.len()
    }

    pub fn rates(&self, f: i64) -> &[f64] {
        &self.rows[(f - self.f_min) as usize]
    }

    /// Index of the grid rate nearest to `p` in log space.
    pub fn nearest_index(&self, f: i64, p: f64) -> usize {
        let lp = p.ln();
        let rates = self.rates(f);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &r) in rates.iter().enumerate() {
            let d = (r.ln() - lp).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Source of per-cell transition distributions.
pub trait TransitionProvider: Sync {
    fn transitions(
        &self,
        f: i64,
        rate_index: usize,
        p: f64,
        lambda: usize,
    ) -> Result<TransitionDistribution>;
}

impl<F> TransitionProvider for F
where
    F: Fn(i64, usize, f64, usize) -> Result<TransitionDistribution> + Sync,
{
    fn transitions(
        &self,
        f: i64,
        rate_index: usize,
        p: f64,
        lambda: usize,
    ) -> Result<TransitionDistribution> {
        self(f, rate_index, p, lambda)
    }
}

/// Expected remaining time from a level with the given transitions, when the
/// optimal times of the better levels are `tail[i − 1] = T*_{f+i}`.
///
/// The denominator `1 − p̃_0` is evaluated as `Σ_{i≥1} p̃_i`.
pub fn expected_time(trans: &TransitionDistribution, tail: &[ExtendedTime]) -> Result<ExtendedTime> {
    let total = trans.total();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized(total));
    }
    let success = trans.improvement_probability();
    if success <= 0.0 {
        return Ok(ExtendedTime::INFINITY);
    }
    let mut numerator = 1.0;
    for (i, &q) in trans.gains().iter().enumerate().skip(1) {
        if q <= 0.0 {
            continue;
        }
        let t = tail.get(i - 1).ok_or_else(|| {
            Error::InvalidArgument(format!("gain {i} has no tail time"))
        })?;
        if t.is_infinite() {
            return Ok(ExtendedTime::INFINITY);
        }
        numerator += q * t.value();
    }
    Ok(ExtendedTime(numerator / success))
}

/// Where the transition probabilities behind a table came from.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionSource {
    MonteCarlo(McConfig),
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub problem: String,
    pub n: usize,
    pub lambda: usize,
    pub source: TransitionSource,
}

/// `T[f, p]` for every grid cell, with the row optima `T*_f` and `P^opt_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTables {
    meta: TableMeta,
    f_min: i64,
    f_max: i64,
    grid: RateGrid,
    times: Vec<Vec<ExtendedTime>>,
    t_star: Vec<ExtendedTime>,
    p_opt: Vec<Option<usize>>,
}

/// Row minimum with ties (within [`TIE_TOLERANCE`]) going to the smallest rate.
fn row_optimum(row: &[ExtendedTime]) -> (ExtendedTime, usize) {
    let min = row.iter().copied().min().unwrap_or(ExtendedTime::INFINITY);
    if min.is_infinite() {
        return (ExtendedTime::INFINITY, 0);
    }
    let limit = min.value() * (1.0 + TIE_TOLERANCE);
    let idx = row.iter().position(|t| t.value() <= limit).unwrap();
    (row[idx], idx)
}

impl DpTables {
    /// Assembles tables from the cell times, deriving `T*` and `P^opt`.
    pub fn from_times(
        meta: TableMeta,
        f_min: i64,
        f_max: i64,
        grid: RateGrid,
        times: Vec<Vec<ExtendedTime>>,
    ) -> Result<Self> {
        let levels = (f_max - f_min) as usize;
        if grid.levels() != levels || times.len() != levels {
            return Err(Error::Mismatch(format!(
                "expected {levels} levels, grid has {} and times have {}",
                grid.levels(),
                times.len()
            )));
        }
        let mut t_star = Vec::with_capacity(levels + 1);
        let mut p_opt = Vec::with_capacity(levels + 1);
        for (i, row) in times.iter().enumerate() {
            if row.len() != grid.rows[i].len() {
                return Err(Error::Mismatch(format!(
                    "fitness {}: {} times for {} rates",
                    f_min + i as i64,
                    row.len(),
                    grid.rows[i].len()
                )));
            }
            let (t, idx) = row_optimum(row);
            t_star.push(t);
            p_opt.push(Some(idx));
        }
        t_star.push(ExtendedTime::ZERO);
        p_opt.push(None);
        Ok(Self {
            meta,
            f_min,
            f_max,
            grid,
            times,
            t_star,
            p_opt,
        })
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn fitness_range(&self) -> (i64, i64) {
        (self.f_min, self.f_max)
    }

    pub fn grid(&self) -> &RateGrid {
        &self.grid
    }

    fn level(&self, f: i64) -> Result<usize> {
        if f < self.f_min || f > self.f_max {
            return Err(Error::FitnessOutOfRange {
                fitness: f,
                min: self.f_min,
                max: self.f_max,
            });
        }
        Ok((f - self.f_min) as usize)
    }

    /// The row of `T[f, ·]`, aligned with `grid().rates(f)`; empty for `f_max`.
    pub fn row(&self, f: i64) -> Result<&[ExtendedTime]> {
        let i = self.level(f)?;
        Ok(self.times.get(i).map(Vec::as_slice).unwrap_or(&[]))
    }

    pub fn time(&self, f: i64, rate_index: usize) -> Result<ExtendedTime> {
        self.row(f)?.get(rate_index).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("rate index {rate_index} out of range at fitness {f}"))
        })
    }

    pub fn t_star(&self, f: i64) -> Result<ExtendedTime> {
        Ok(self.t_star[self.level(f)?])
    }

    pub fn t_star_all(&self) -> &[ExtendedTime] {
        &self.t_star
    }

    pub fn p_opt_index(&self, f: i64) -> Result<Option<usize>> {
        Ok(self.p_opt[self.level(f)?])
    }

    pub fn p_opt(&self, f: i64) -> Result<Option<f64>> {
        Ok(self
            .p_opt_index(f)?
            .map(|i| self.grid.rates(f)[i]))
    }

    /// Fitness levels whose optimal time is infinite.
    pub fn infinite_levels(&self) -> Vec<i64> {
        (self.f_min..self.f_max)
            .filter(|&f| self.t_star[(f - self.f_min) as usize].is_infinite())
            .collect()
    }
}

/// Fills the tables level by level from `f_max − 1` down to `f_min`.
///
/// Cells of one level are evaluated in parallel on the current rayon pool and
/// merged by index.
pub fn solve<P, T>(
    problem: &P,
    grid: &RateGrid,
    lambda: usize,
    provider: &T,
    source: TransitionSource,
) -> Result<DpTables>
where
    P: Problem + ?Sized,
    T: TransitionProvider + ?Sized,
{
    if lambda == 0 {
        return Err(Error::InvalidArgument("lambda must be at least 1".into()));
    }
    let (f_min, f_max) = problem.fitness_range();
    let levels = (f_max - f_min) as usize;
    if grid.levels() != levels || grid.f_min() != f_min {
        return Err(Error::Mismatch(format!(
            "grid covers {} levels from {}, problem needs {levels} from {f_min}",
            grid.levels(),
            grid.f_min()
        )));
    }
    // t_star[i] holds T* for fitness f_min + i
    let mut t_star = vec![ExtendedTime::INFINITY; levels + 1];
    t_star[levels] = ExtendedTime::ZERO;
    let mut times = vec![Vec::new(); levels];

    for f in (f_min..f_max).rev() {
        let level = (f - f_min) as usize;
        let tail = &t_star[level + 1..];
        let row = grid
            .rates(f)
            .par_iter()
            .enumerate()
            .map(|(j, &p)| {
                let trans = provider.transitions(f, j, p, lambda)?;
                expected_time(&trans, tail)
            })
            .collect::<Result<Vec<_>>>()?;
        t_star[level] = row_optimum(&row).0;
        times[level] = row;
        log::debug!("fitness {f}: T* = {}", t_star[level]);
    }

    let tables = DpTables::from_times(
        TableMeta {
            problem: problem.name().to_string(),
            n: problem.size(),
            lambda,
            source,
        },
        f_min,
        f_max,
        grid.clone(),
        times,
    )?;
    let infinite = tables.infinite_levels();
    if !infinite.is_empty() {
        warn!("infinite optimal time at fitness levels {infinite:?}");
    }
    Ok(tables)
}
