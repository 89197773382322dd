//! Monte Carlo estimation of one-iteration fitness gains.
//!
//! A parent of the requested fitness is fixed and `(1+λ)` iterations are
//! simulated without ever replacing it. Each iteration records the fitness the
//! next parent would have had; the empirical frequencies of the gains are the
//! transition estimates.

use rand::Rng;

use crate::dp::TransitionProvider;
use crate::error::{Error, Result};
use crate::mutation::{ShiftBinomial, SubsetSampler};
use crate::problems::Problem;
use crate::rng;

/// Simulation budget of one Monte Carlo cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Maximum number of simulated iterations (`N_I`).
    pub iterations: u64,
    /// Stop once this many strictly improving iterations were seen (`N_T`).
    pub successes: u64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            iterations: 1_000_000,
            successes: 50_000,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn new(iterations: u64, successes: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            iterations,
            successes,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration without early stopping (`N_T = N_I`).
    pub fn fixed(iterations: u64, seed: u64) -> Result<Self> {
        Self::new(iterations, iterations, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.successes == 0 {
            return Err(Error::Config(
                "mc.iterations and mc.successes must be positive".into(),
            ));
        }
        if self.successes > self.iterations {
            return Err(Error::Config(format!(
                "mc.successes ({}) exceeds mc.iterations ({})",
                self.successes, self.iterations
            )));
        }
        Ok(())
    }
}

/// Probabilities `p̃_i` of gaining exactly `i` fitness in one iteration;
/// `p̃_0` also covers iterations whose best offspring was worse.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution {
    gains: Vec<f64>,
    samples: Option<u64>,
}

impl TransitionDistribution {
    /// Exact probabilities, indexed by gain.
    pub fn from_probabilities(gains: Vec<f64>) -> Self {
        Self {
            gains,
            samples: None,
        }
    }

    /// Empirical frequencies from gain counts over `samples` iterations.
    pub fn from_counts(counts: &[u64], samples: u64) -> Self {
        let total = samples as f64;
        Self {
            gains: counts.iter().map(|&c| c as f64 / total).collect(),
            samples: Some(samples),
        }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn gain(&self, i: usize) -> f64 {
        self.gains.get(i).copied().unwrap_or(0.0)
    }

    /// `N_A`, the number of simulated iterations; `None` for exact laws.
    pub fn samples(&self) -> Option<u64> {
        self.samples
    }

    /// `Pr[strict improvement]`, summed over positive gains.
    pub fn improvement_probability(&self) -> f64 {
        self.gains.iter().skip(1).sum()
    }

    pub fn total(&self) -> f64 {
        self.gains.iter().sum()
    }
}

/// Estimates the transition distribution of the `(1+λ)` EA with shift
/// mutation at rate `p` from a parent of fitness `f`.
pub fn estimate_transitions<P, R>(
    problem: &P,
    f: i64,
    p: f64,
    lambda: usize,
    cfg: &McConfig,
    rng: &mut R,
) -> Result<TransitionDistribution>
where
    P: Problem + ?Sized,
    R: Rng + ?Sized,
{
    let (_, f_max) = problem.fitness_range();
    if f >= f_max {
        return Err(Error::InvalidArgument(format!(
            "no transitions from the optimal fitness {f}"
        )));
    }
    if lambda == 0 {
        return Err(Error::InvalidArgument("lambda must be at least 1".into()));
    }
    cfg.validate()?;
    let flips = ShiftBinomial::new(problem.size(), p)?;
    let mut parent = problem.representative(f)?;
    let mut subsets = SubsetSampler::new(problem.size());
    let mut counts = vec![0u64; (f_max - f + 1) as usize];
    let mut successes = 0u64;
    let mut simulated = 0u64;

    while simulated < cfg.iterations {
        simulated += 1;
        let mut best = f;
        for _ in 0..lambda {
            let k = flips.sample(rng);
            let chosen = subsets.sample(k, rng);
            for &i in chosen {
                parent.flip(i);
            }
            let fy = problem.evaluate(&parent);
            for &i in chosen {
                parent.flip(i);
            }
            best = best.max(fy);
        }
        assert!(
            best <= f_max,
            "offspring fitness {best} exceeds the maximum {f_max}"
        );
        counts[(best - f) as usize] += 1;
        if best > f {
            successes += 1;
            if successes >= cfg.successes {
                break;
            }
        }
    }
    Ok(TransitionDistribution::from_counts(&counts, simulated))
}

/// Transition provider backed by [`estimate_transitions`], one independent
/// random stream per `(level, rate index)` cell.
pub struct MonteCarloProvider<'a, P: ?Sized> {
    problem: &'a P,
    cfg: McConfig,
}

impl<'a, P: Problem + ?Sized> MonteCarloProvider<'a, P> {
    pub fn new(problem: &'a P, cfg: McConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { problem, cfg })
    }
}

impl<P: Problem + ?Sized> TransitionProvider for MonteCarloProvider<'_, P> {
    fn transitions(
        &self,
        f: i64,
        rate_index: usize,
        p: f64,
        lambda: usize,
    ) -> Result<TransitionDistribution> {
        let level = (f - self.problem.fitness_range().0) as usize;
        let mut rng = rng::cell_stream(self.cfg.seed, level, rate_index);
        estimate_transitions(self.problem, f, p, lambda, &self.cfg, &mut rng)
    }
}
