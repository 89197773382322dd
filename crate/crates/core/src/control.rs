//! The `(1+λ)` EA with shift mutation under mutation-rate control policies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mutation::{ShiftBinomial, SubsetSampler};
use crate::problems::{Genotype, Problem};

/// Upper cap on controlled rates.
pub const DEFAULT_P_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Static,
    /// Multiplicative update with `A = 2`, `b = 1/2`.
    AbRule,
    /// Half the offspring at `p/2`, half at `2p`.
    TwoRate,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(PolicyKind::Static),
            "ab" => Ok(PolicyKind::AbRule),
            "two-rate" => Ok(PolicyKind::TwoRate),
            other => Err(Error::InvalidArgument(format!("unknown policy '{other}'"))),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Static => "static",
            PolicyKind::AbRule => "ab",
            PolicyKind::TwoRate => "two-rate",
        })
    }
}

/// The two lower caps studied for controlled rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMinPreset {
    /// `1/n`
    Linear,
    /// `1/n²`
    Quadratic,
}

impl PMinPreset {
    pub fn value(self, n: usize) -> f64 {
        match self {
            PMinPreset::Linear => 1.0 / n as f64,
            PMinPreset::Quadratic => 1.0 / (n as f64 * n as f64),
        }
    }
}

/// What a policy observes at the end of an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationOutcome {
    pub parent_fitness: i64,
    pub best: i64,
    /// Best of the `p/2` half (two-rate only).
    pub best_low: i64,
    /// Best of the `2p` half (two-rate only).
    pub best_high: i64,
}

/// A stateful mutation-rate control rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolicy {
    kind: PolicyKind,
    rate: f64,
    p_min: f64,
    p_max: f64,
    clamp_offspring: bool,
}

impl ControlPolicy {
    /// Fixed rate `p`; bounds collapse onto `p`.
    pub fn static_rate(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidRate(p));
        }
        Ok(Self {
            kind: PolicyKind::Static,
            rate: p,
            p_min: p,
            p_max: p,
            clamp_offspring: false,
        })
    }

    fn controlled(kind: PolicyKind, n: usize, p_min: f64, p_max: f64) -> Result<Self> {
        if !(p_min > 0.0 && p_min <= p_max && p_max <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid rate bounds [{p_min}, {p_max}]"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("problem size must be positive".into()));
        }
        Ok(Self {
            kind,
            rate: (1.0 / n as f64).clamp(p_min, p_max),
            p_min,
            p_max,
            clamp_offspring: false,
        })
    }

    /// `(A, b)` rule starting at `1/n`: double on `best ≥ parent`, halve otherwise.
    pub fn ab_rule(n: usize, p_min: f64, p_max: f64) -> Result<Self> {
        Self::controlled(PolicyKind::AbRule, n, p_min, p_max)
    }

    /// Two-rate rule starting at `1/n`.
    pub fn two_rate(n: usize, p_min: f64, p_max: f64) -> Result<Self> {
        Self::controlled(PolicyKind::TwoRate, n, p_min, p_max)
    }

    /// Also clamp the two-rate offspring rates `p/2`, `2p` to `[p_min, p_max]`.
    pub fn with_clamped_offspring(mut self, clamp: bool) -> Self {
        self.clamp_offspring = clamp;
        self
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.p_min, self.p_max)
    }

    /// Rate for offspring `i` of `lambda`.
    pub fn offspring_rate(&self, i: usize, lambda: usize) -> f64 {
        match self.kind {
            PolicyKind::Static | PolicyKind::AbRule => self.rate,
            PolicyKind::TwoRate => {
                let r = if i < lambda / 2 {
                    self.rate / 2.0
                } else {
                    (self.rate * 2.0).min(1.0)
                };
                if self.clamp_offspring {
                    r.clamp(self.p_min, self.p_max)
                } else {
                    r
                }
            }
        }
    }

    pub fn update<R: Rng + ?Sized>(&mut self, outcome: &IterationOutcome, rng: &mut R) {
        let next = match self.kind {
            PolicyKind::Static => return,
            PolicyKind::AbRule => {
                if outcome.best >= outcome.parent_fitness {
                    self.rate * 2.0
                } else {
                    self.rate / 2.0
                }
            }
            PolicyKind::TwoRate => {
                let halve_prob = match outcome.best_low.cmp(&outcome.best_high) {
                    std::cmp::Ordering::Greater => 0.75,
                    std::cmp::Ordering::Less => 0.25,
                    std::cmp::Ordering::Equal => 0.5,
                };
                if rng.random::<f64>() < halve_prob {
                    self.rate / 2.0
                } else {
                    self.rate * 2.0
                }
            }
        };
        self.rate = next.clamp(self.p_min, self.p_max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: u64,
    /// Parent fitness before selection.
    pub fitness: i64,
    /// The policy's rate in this iteration.
    pub rate: f64,
    pub best_offspring_fitness: i64,
    /// Strict fitness improvement.
    pub success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Optimum { iterations: u64 },
    BudgetExhausted { iterations: u64 },
}

impl RunStatus {
    pub fn iterations(self) -> u64 {
        match self {
            RunStatus::Optimum { iterations } | RunStatus::BudgetExhausted { iterations } => {
                iterations
            }
        }
    }

    pub fn reached_optimum(self) -> bool {
        matches!(self, RunStatus::Optimum { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub initial_fitness: i64,
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub budget: u64,
    /// Start from a representative of this fitness instead of a random string.
    pub start_fitness: Option<i64>,
    /// Keep per-iteration records; the status is always kept.
    pub record: bool,
}

impl RunOptions {
    pub fn with_budget(budget: u64) -> Self {
        Self {
            budget,
            start_fitness: None,
            record: true,
        }
    }
}

/// Caches shift-binomial samplers by rate.
struct FlipCache {
    n: usize,
    entries: Vec<(f64, ShiftBinomial)>,
}

impl FlipCache {
    fn get(&mut self, p: f64) -> Result<&ShiftBinomial> {
        if let Some(i) = self.entries.iter().position(|(r, _)| *r == p) {
            return Ok(&self.entries[i].1);
        }
        if self.entries.len() >= 4 {
            self.entries.remove(0);
        }
        self.entries.push((p, ShiftBinomial::new(self.n, p)?));
        Ok(&self.entries.last().unwrap().1)
    }
}

/// Runs the `(1+λ)` EA until the optimum is found or the budget is spent.
pub fn run_ea<P, R>(
    problem: &P,
    lambda: usize,
    policy: ControlPolicy,
    budget: u64,
    rng: &mut R,
) -> Result<RunTrace>
where
    P: Problem + ?Sized,
    R: Rng + ?Sized,
{
    run_ea_with(problem, lambda, policy, RunOptions::with_budget(budget), rng)
}

pub fn run_ea_with<P, R>(
    problem: &P,
    lambda: usize,
    mut policy: ControlPolicy,
    options: RunOptions,
    rng: &mut R,
) -> Result<RunTrace>
where
    P: Problem + ?Sized,
    R: Rng + ?Sized,
{
    if options.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    if lambda == 0 {
        return Err(Error::InvalidArgument("lambda must be at least 1".into()));
    }
    if policy.kind == PolicyKind::TwoRate && !lambda.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "two-rate policy needs an even lambda, got {lambda}"
        )));
    }
    let n = problem.size();
    let f_max = problem.fitness_range().1;
    let mut parent = match options.start_fitness {
        Some(f) => problem.representative(f)?,
        None => Genotype::random(n, rng),
    };
    let mut parent_fitness = problem.evaluate(&parent);
    let initial_fitness = parent_fitness;
    let mut scratch = parent.clone();
    let mut best_genotype = parent.clone();
    let mut subsets = SubsetSampler::new(n);
    let mut flips = FlipCache {
        n,
        entries: Vec::new(),
    };
    let mut records = Vec::new();
    let mut t = 0u64;

    while parent_fitness < f_max && t < options.budget {
        t += 1;
        let rate = policy.rate();
        let mut best = i64::MIN;
        let mut ties = 0u32;
        let mut best_low = i64::MIN;
        let mut best_high = i64::MIN;
        for i in 0..lambda {
            let k = flips.get(policy.offspring_rate(i, lambda))?.sample(rng);
            scratch.copy_from(&parent);
            subsets.flip_in_place(&mut scratch, k, rng);
            let fy = problem.evaluate(&scratch);
            if i < lambda / 2 {
                best_low = best_low.max(fy);
            } else {
                best_high = best_high.max(fy);
            }
            // uniform choice among the best offspring by reservoir sampling
            if fy > best {
                best = fy;
                ties = 1;
                best_genotype.copy_from(&scratch);
            } else if fy == best {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best_genotype.copy_from(&scratch);
                }
            }
        }
        if options.record {
            records.push(IterationRecord {
                iteration: t,
                fitness: parent_fitness,
                rate,
                best_offspring_fitness: best,
                success: best > parent_fitness,
            });
        }
        let outcome = IterationOutcome {
            parent_fitness,
            best,
            best_low,
            best_high,
        };
        if best >= parent_fitness {
            std::mem::swap(&mut parent, &mut best_genotype);
            parent_fitness = best;
        }
        policy.update(&outcome, rng);
    }

    let status = if parent_fitness >= f_max {
        RunStatus::Optimum { iterations: t }
    } else {
        RunStatus::BudgetExhausted { iterations: t }
    };
    Ok(RunTrace {
        initial_fitness,
        records,
        status,
    })
}

/// Mean and standard error of a sample.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
