//! Exact transition laws for OM-decomposable problems.
//!
//! Flipping `k` of `n` bits when `d` of them disagree with the optimum changes
//! the OneMax value by `2j − k`, where the number `j` of corrected bits is
//! hypergeometric. Mixing over the shift-binomial flip count gives the
//! single-offspring law; the best of `λ` independent offspring has CDF `F^λ`.

use crate::dp::{self, DpTables, RateGrid, TransitionProvider, TransitionSource};
use crate::error::{Error, Result};
use crate::lnfact::LnFactorials;
use crate::montecarlo::TransitionDistribution;
use crate::mutation::ShiftBinomial;
use crate::problems::{FitnessDistribution, OmMap, Problem};

/// Probabilities below this are flushed to zero.
pub const UNDERFLOW_CUTOFF: f64 = 1e-300;

/// Law of the OneMax gain when flipping `k` of `n` bits with `d` wrong bits.
#[derive(Debug, Clone, PartialEq)]
pub struct GainLaw {
    k: usize,
    /// `(j, Pr[j corrected bits])` for the feasible `j`.
    terms: Vec<(usize, f64)>,
}

impl GainLaw {
    /// `(gain, probability)` pairs with `gain = 2j − k`, increasing in gain.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k = self.k as i64;
        self.terms.iter().map(move |&(j, q)| (2 * j as i64 - k, q))
    }

    pub fn prob(&self, gain: i64) -> f64 {
        self.iter()
            .find(|&(g, _)| g == gain)
            .map(|(_, q)| q)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.terms.iter().map(|&(_, q)| q).sum()
    }
}

fn gain_terms(lf: &LnFactorials, n: usize, d: usize, k: usize) -> Vec<(usize, f64)> {
    let lo = k.saturating_sub(n - d);
    let hi = k.min(d);
    let ln_total = lf.ln_choose(n, k);
    (lo..=hi)
        .map(|j| {
            let q = (lf.ln_choose(d, j) + lf.ln_choose(n - d, k - j) - ln_total).exp();
            (j, q)
        })
        .collect()
}

/// Hypergeometric gain law `Pr[gain = 2j − k] = C(d,j)·C(n−d,k−j)/C(n,k)`.
pub fn gain_pmf(n: usize, d: usize, k: usize) -> Result<GainLaw> {
    if d > n {
        return Err(Error::InvalidArgument(format!("wrong-bit count {d} exceeds n = {n}")));
    }
    if k > n {
        return Err(Error::InvalidFlipCount { k, n });
    }
    let lf = LnFactorials::new(n);
    Ok(GainLaw {
        k,
        terms: gain_terms(&lf, n, d, k),
    })
}

/// Precomputed tables for exact transitions of one problem.
pub struct ExactModel<'a, P: ?Sized> {
    problem: &'a P,
    map: OmMap,
    lf: LnFactorials,
}

impl<'a, P: Problem + ?Sized> ExactModel<'a, P> {
    pub fn new(problem: &'a P) -> Result<Self> {
        Ok(Self {
            problem,
            map: OmMap::new(problem)?,
            lf: LnFactorials::new(problem.size()),
        })
    }

    fn parent_om(&self, f: i64) -> Result<usize> {
        let (min, max) = self.problem.fitness_range();
        self.map
            .om(f)
            .ok_or(Error::FitnessOutOfRange { fitness: f, min, max })
    }

    /// Offspring fitness masses indexed by `fitness − f_min`.
    fn offspring_masses(&self, f: i64, p: f64) -> Result<Vec<f64>> {
        let n = self.problem.size();
        let (f_min, f_max) = self.problem.fitness_range();
        let m = self.parent_om(f)?;
        let d = n - m;
        let flips = ShiftBinomial::new(n, p)?.pmf_vec_with(&self.lf);
        let mut om_mass = vec![0.0; n + 1];
        for (k, &wk) in flips.iter().enumerate() {
            if wk <= 0.0 {
                continue;
            }
            for (j, q) in gain_terms(&self.lf, n, d, k) {
                om_mass[m + 2 * j - k] += wk * q;
            }
        }
        let mut mass = vec![0.0; (f_max - f_min + 1) as usize];
        for (om, q) in om_mass.into_iter().enumerate() {
            mass[(self.map.fitness(om) - f_min) as usize] += q;
        }
        for q in mass.iter_mut() {
            if *q < UNDERFLOW_CUTOFF {
                *q = 0.0;
            }
        }
        Ok(mass)
    }

    pub fn offspring_fitness_pmf(&self, f: i64, p: f64) -> Result<FitnessDistribution> {
        let f_min = self.problem.fitness_range().0;
        let mass = self.offspring_masses(f, p)?;
        Ok(FitnessDistribution::from_pairs(
            mass.into_iter()
                .enumerate()
                .map(|(i, q)| (f_min + i as i64, q)),
        ))
    }

    pub fn transition(&self, f: i64, p: f64, lambda: usize) -> Result<TransitionDistribution> {
        if lambda == 0 {
            return Err(Error::InvalidArgument("lambda must be at least 1".into()));
        }
        let (f_min, f_max) = self.problem.fitness_range();
        if f >= f_max {
            return Err(Error::InvalidArgument(format!(
                "no transitions from the optimal fitness {f}"
            )));
        }
        let mass = self.offspring_masses(f, p)?;
        let above = best_exceeds(&mass, lambda);
        let base = (f - f_min) as usize;
        // Pr[best ≤ f] computed directly to keep precision when it is close to 1
        let survive = above_single(&mass)[base].min(1.0);
        let mut gains = Vec::with_capacity((f_max - f + 1) as usize);
        gains.push((lambda as f64 * (-survive).ln_1p()).exp());
        for x in base + 1..mass.len() {
            let q = (above[x - 1] - above[x]).max(0.0);
            gains.push(if q < UNDERFLOW_CUTOFF { 0.0 } else { q });
        }
        Ok(TransitionDistribution::from_probabilities(gains))
    }
}

/// `G[x] = Pr[fitness > x]` summed from the top.
fn above_single(mass: &[f64]) -> Vec<f64> {
    let mut above = vec![0.0; mass.len()];
    let mut acc = 0.0;
    for x in (0..mass.len()).rev() {
        above[x] = acc;
        acc += mass[x];
    }
    above
}

/// `Pr[max of λ draws > x] = 1 − (1 − G[x])^λ`.
fn best_exceeds(mass: &[f64], lambda: usize) -> Vec<f64> {
    above_single(mass)
        .into_iter()
        .map(|g| (-(lambda as f64 * (-g.min(1.0)).ln_1p()).exp_m1()).clamp(0.0, 1.0))
        .collect()
}

/// Law of the maximum of `λ` independent draws from `dist`.
pub fn best_of(dist: &FitnessDistribution, lambda: usize) -> FitnessDistribution {
    let above = best_exceeds(dist.masses(), lambda);
    let mut prev = 1.0;
    FitnessDistribution::from_pairs(dist.support().iter().zip(above).map(|(&f, a)| {
        let q = (prev - a).max(0.0);
        prev = a;
        (f, q)
    }))
}

/// Exact law of one shift-mutation offspring of a parent with fitness `f`.
pub fn offspring_fitness_pmf<P: Problem + ?Sized>(
    problem: &P,
    f: i64,
    p: f64,
) -> Result<FitnessDistribution> {
    ExactModel::new(problem)?.offspring_fitness_pmf(f, p)
}

/// Exact one-iteration transition law of the `(1+λ)` EA.
pub fn transition_exact<P: Problem + ?Sized>(
    problem: &P,
    f: i64,
    p: f64,
    lambda: usize,
) -> Result<TransitionDistribution> {
    ExactModel::new(problem)?.transition(f, p, lambda)
}

impl<P: Problem + ?Sized> TransitionProvider for ExactModel<'_, P> {
    fn transitions(
        &self,
        f: i64,
        _rate_index: usize,
        p: f64,
        lambda: usize,
    ) -> Result<TransitionDistribution> {
        self.transition(f, p, lambda)
    }
}

/// Runs the level DP with exact transitions.
pub fn solve_exact<P: Problem + ?Sized>(
    problem: &P,
    grid: &RateGrid,
    lambda: usize,
) -> Result<DpTables> {
    let model = ExactModel::new(problem)?;
    dp::solve(problem, grid, lambda, &model, TransitionSource::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutation::flip_k_bits;
    use crate::problems::{Benchmark, Genotype};
    use crate::rng::run_stream;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn gain_examples() {
        let g = gain_pmf(3, 1, 1).unwrap();
        assert!(close(g.prob(1), 1.0 / 3.0));
        assert!(close(g.prob(-1), 2.0 / 3.0));
        let g = gain_pmf(4, 4, 2).unwrap();
        assert!(close(g.prob(2), 1.0));
        assert_eq!(g.iter().count(), 1);
        // all C(6,2) = 15 pairs: 3 wrong-wrong, 9 mixed, 3 right-right
        let g = gain_pmf(6, 3, 2).unwrap();
        assert!(close(g.prob(2), 3.0 / 15.0));
        assert!(close(g.prob(0), 9.0 / 15.0));
        assert!(close(g.prob(-2), 3.0 / 15.0));
        assert!(gain_pmf(3, 4, 1).is_err());
        assert!(gain_pmf(3, 1, 4).is_err());
    }

    #[test]
    fn offspring_law_example() {
        let om = Benchmark::onemax(2).unwrap();
        let d = offspring_fitness_pmf(&om, 1, 0.5).unwrap();
        assert!(close(d.mass_at(2), 0.375));
        assert!(close(d.mass_at(1), 0.25));
        assert!(close(d.mass_at(0), 0.375));
    }

    #[test]
    fn tiny_rate_approaches_one_bit_flips() {
        let om = Benchmark::onemax(10).unwrap();
        let d = offspring_fitness_pmf(&om, 7, 1e-12).unwrap();
        assert!((d.mass_at(8) - 0.3).abs() < 1e-9);
        assert!((d.mass_at(6) - 0.7).abs() < 1e-9);
    }

    #[test]
    fn transition_examples() {
        let om = Benchmark::onemax(2).unwrap();
        let t = transition_exact(&om, 1, 0.5, 1).unwrap();
        assert!(close(t.gain(0), 0.625));
        assert!(close(t.gain(1), 0.375));
        let t = transition_exact(&om, 1, 0.5, 2).unwrap();
        assert!(close(t.gain(1), 0.609375));
        assert!(close(t.gain(0), 0.390625));
        assert!(transition_exact(&om, 2, 0.5, 1).is_err());
        assert!(transition_exact(&om, 1, 0.5, 0).is_err());
    }

    #[test]
    fn lambda_one_folds_losses_into_stay() {
        let r = Benchmark::ruggedness(12).unwrap();
        for f in 0..12 {
            let single = offspring_fitness_pmf(&r, f, 0.2).unwrap();
            let t = transition_exact(&r, f, 0.2, 1).unwrap();
            assert!((t.gain(0) - single.cdf(f)).abs() < 1e-12);
            for i in 1..t.gains().len() {
                assert!((t.gain(i) - single.mass_at(f + i as i64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalized_and_nonnegative() {
        for problem in [Benchmark::onemax(30).unwrap(), Benchmark::ruggedness(30).unwrap()] {
            for f in 0..30 {
                for p in [1e-4, 0.01, 0.3, 1.0] {
                    let d = offspring_fitness_pmf(&problem, f, p).unwrap();
                    assert!((d.total() - 1.0).abs() < 1e-12);
                    for lambda in [1, 8, 512] {
                        let t = transition_exact(&problem, f, p, lambda).unwrap();
                        assert!(t.gains().iter().all(|&q| q >= 0.0));
                        assert!((t.total() - 1.0).abs() < 1e-12, "f={f} p={p} λ={lambda}");
                    }
                }
            }
        }
    }

    #[test]
    fn best_of_more_offspring_dominates() {
        let r = Benchmark::ruggedness(20).unwrap();
        let single = offspring_fitness_pmf(&r, 11, 0.08).unwrap();
        let mut prev = best_of(&single, 1);
        for lambda in [2, 3, 8, 64] {
            let next = best_of(&single, lambda);
            for &f in single.support() {
                assert!(next.cdf(f) <= prev.cdf(f) + 1e-15);
            }
            prev = next;
        }
    }

    fn enumerated_gain(n: usize, d: usize, k: usize) -> Vec<f64> {
        // parent with the first d bits wrong; count subsets by corrected bits
        let mut counts = vec![0u64; 2 * k + 1];
        let mut total = 0u64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let corrected = (0..d).filter(|&i| mask & (1 << i) != 0).count();
            counts[2 * corrected] += 1;
            total += 1;
        }
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    #[test]
    fn gain_matches_subset_enumeration() {
        for n in 1..=8 {
            for d in 0..=n {
                for k in 0..=n {
                    let want = enumerated_gain(n, d, k);
                    let got = gain_pmf(n, d, k).unwrap();
                    assert!((got.total() - 1.0).abs() < 1e-12);
                    for (idx, w) in want.iter().enumerate() {
                        let gain = idx as i64 - k as i64;
                        assert!(
                            (got.prob(gain) - w).abs() < 1e-12,
                            "n={n} d={d} k={k} gain={gain}"
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn flip_operator_follows_gain_law(n in 1usize..=10, m_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0, seed in any::<u64>()) {
            let m = (m_frac * n as f64) as usize;
            let k = (k_frac * n as f64) as usize;
            let x = Genotype::with_ones(n, m);
            let law = gain_pmf(n, n - m, k).unwrap();
            let mut rng = run_stream(seed, 0);
            let draws = 20_000usize;
            let mut counts = vec![0usize; 2 * n + 1];
            for _ in 0..draws {
                let y = flip_k_bits(&x, k, &mut rng).unwrap();
                counts[(y.count_ones() as i64 - m as i64 + n as i64) as usize] += 1;
            }
            for (idx, &c) in counts.iter().enumerate() {
                let q = law.prob(idx as i64 - n as i64);
                let se = (draws as f64 * q * (1.0 - q)).sqrt();
                prop_assert!((c as f64 - draws as f64 * q).abs() <= 5.0 * se + 1.0);
            }
        }
    }
}
