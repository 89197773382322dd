//! Benchmark fitness functions and their fitness-level metadata.
//!
//! The hidden optimum of every benchmark is the all-ones string. All variation
//! operators in this crate are unbiased, so nothing depends on that choice.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lnfact::LnFactorials;

/// A fixed-length bit string.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    bits: Vec<bool>,
}

impl Genotype {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    /// String with `ones` leading one-bits followed by zeros.
    pub fn with_ones(n: usize, ones: usize) -> Self {
        Self {
            bits: (0..n).map(|i| i < ones).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..n).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Genotype) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub(crate) fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub(crate) fn copy_from(&mut self, other: &Genotype) {
        self.bits.copy_from_slice(&other.bits);
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype(")?;
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bad bit '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Genotype::new)
    }
}

/// Number of positions agreeing with the all-ones optimum.
pub fn onemax_eval(x: &Genotype) -> i64 {
    x.count_ones() as i64
}

/// Ruggedness value of a string with OneMax value `om` in dimension `n`.
pub fn ruggedness_of_om(n: usize, om: usize) -> i64 {
    let om = om as i64;
    let n = n as i64;
    if om == n {
        n
    } else if om % 2 == n % 2 {
        om + 1
    } else {
        om - 1
    }
}

pub fn ruggedness_eval(x: &Genotype) -> i64 {
    ruggedness_of_om(x.len(), x.count_ones())
}

/// A fitness landscape exposed through fitness-level semantics.
///
/// Implementors must satisfy the level property the DP relies on: any two
/// non-optimal individuals with equal fitness induce the same distribution of
/// future fitness values.
pub trait Problem: Sync {
    fn name(&self) -> &str;

    /// Problem size `n`.
    fn size(&self) -> usize;

    fn evaluate(&self, x: &Genotype) -> i64;

    /// `(f_min, f_max)`; `f_max` is the optimal fitness.
    fn fitness_range(&self) -> (i64, i64);

    /// Fitness as a function of the OneMax value, if the problem is
    /// OM-decomposable.
    fn fitness_of_om(&self, _om: usize) -> Option<i64> {
        None
    }

    fn om_decomposable(&self) -> bool {
        self.fitness_of_om(0).is_some()
    }

    /// Any genotype with fitness `f`.
    fn representative(&self, f: i64) -> Result<Genotype> {
        let om = fitness_to_om(self, f)?;
        Ok(Genotype::with_ones(self.size(), om))
    }
}

fn check_range<P: Problem + ?Sized>(problem: &P, f: i64) -> Result<()> {
    let (min, max) = problem.fitness_range();
    if f < min || f > max {
        return Err(Error::FitnessOutOfRange {
            fitness: f,
            min,
            max,
        });
    }
    Ok(())
}

/// The unique OneMax value with fitness `f`.
pub fn fitness_to_om<P: Problem + ?Sized>(problem: &P, f: i64) -> Result<usize> {
    check_range(problem, f)?;
    if !problem.om_decomposable() {
        return Err(Error::Unsupported(format!(
            "{} is not OM-decomposable",
            problem.name()
        )));
    }
    (0..=problem.size())
        .find(|&om| problem.fitness_of_om(om) == Some(f))
        .ok_or(Error::FitnessOutOfRange {
            fitness: f,
            min: problem.fitness_range().0,
            max: problem.fitness_range().1,
        })
}

/// Bidirectional OM ↔ fitness lookup for OM-decomposable problems.
#[derive(Debug, Clone)]
pub struct OmMap {
    f_min: i64,
    om_to_fitness: Vec<i64>,
    fitness_to_om: Vec<Option<usize>>,
}

impl OmMap {
    pub fn new<P: Problem + ?Sized>(problem: &P) -> Result<Self> {
        let (f_min, f_max) = problem.fitness_range();
        let mut om_to_fitness = Vec::with_capacity(problem.size() + 1);
        let mut fitness_to_om = vec![None; (f_max - f_min + 1) as usize];
        for om in 0..=problem.size() {
            let f = problem.fitness_of_om(om).ok_or_else(|| {
                Error::Unsupported(format!("{} is not OM-decomposable", problem.name()))
            })?;
            check_range(problem, f)?;
            om_to_fitness.push(f);
            fitness_to_om[(f - f_min) as usize] = Some(om);
        }
        Ok(Self {
            f_min,
            om_to_fitness,
            fitness_to_om,
        })
    }

    pub fn fitness(&self, om: usize) -> i64 {
        self.om_to_fitness[om]
    }

    pub fn om(&self, f: i64) -> Option<usize> {
        let idx = f.checked_sub(self.f_min)?;
        self.fitness_to_om.get(idx as usize).copied().flatten()
    }
}

/// Probability masses over fitness values, sorted by fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessDistribution {
    support: Vec<i64>,
    mass: Vec<f64>,
}

impl FitnessDistribution {
    /// Builds a distribution from `(fitness, mass)` pairs; equal fitness
    /// values are merged.
    pub fn from_pairs<I: IntoIterator<Item = (i64, f64)>>(pairs: I) -> Self {
        let mut pairs: Vec<(i64, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|&(f, _)| f);
        let mut support: Vec<i64> = Vec::with_capacity(pairs.len());
        let mut mass: Vec<f64> = Vec::with_capacity(pairs.len());
        for (f, m) in pairs {
            if support.last() == Some(&f) {
                *mass.last_mut().unwrap() += m;
            } else {
                support.push(f);
                mass.push(m);
            }
        }
        Self { support, mass }
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    pub fn mass_at(&self, f: i64) -> f64 {
        self.support
            .binary_search(&f)
            .map(|i| self.mass[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `Pr[X ≤ f]`.
    pub fn cdf(&self, f: i64) -> f64 {
        self.iter().take_while(|&(g, _)| g <= f).map(|(_, m)| m).sum()
    }
}

/// Distribution of the fitness of a uniformly random initial individual.
pub fn initial_fitness_distribution<P: Problem + ?Sized>(
    problem: &P,
) -> Result<FitnessDistribution> {
    let map = OmMap::new(problem)?;
    let n = problem.size();
    let lf = LnFactorials::new(n);
    let ln_total = n as f64 * std::f64::consts::LN_2;
    Ok(FitnessDistribution::from_pairs((0..=n).map(|om| {
        (map.fitness(om), (lf.ln_choose(n, om) - ln_total).exp())
    })))
}

/// Sampling-based estimate of the initial fitness distribution, usable for
/// problems that are not OM-decomposable.
pub fn estimate_initial_distribution<P: Problem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    samples: usize,
    rng: &mut R,
) -> FitnessDistribution {
    let weight = 1.0 / samples as f64;
    FitnessDistribution::from_pairs(
        (0..samples).map(|_| (problem.evaluate(&Genotype::random(problem.size(), rng)), weight)),
    )
}

/// The built-in benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    OneMax { n: usize },
    /// Requires even `n`, for which the OM → fitness map is a bijection
    /// onto `[0..n]`.
    Ruggedness { n: usize },
}

impl Benchmark {
    pub fn onemax(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("problem size must be positive".into()));
        }
        Ok(Benchmark::OneMax { n })
    }

    pub fn ruggedness(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "ruggedness needs a positive even size, got {n}"
            )));
        }
        Ok(Benchmark::Ruggedness { n })
    }

    pub fn by_name(name: &str, n: usize) -> Result<Self> {
        match name {
            "onemax" => Self::onemax(n),
            "ruggedness" => Self::ruggedness(n),
            other => Err(Error::InvalidArgument(format!("unknown problem '{other}'"))),
        }
    }
}

impl Problem for Benchmark {
    fn name(&self) -> &str {
        match self {
            Benchmark::OneMax { .. } => "onemax",
            Benchmark::Ruggedness { .. } => "ruggedness",
        }
    }

    fn size(&self) -> usize {
        match *self {
            Benchmark::OneMax { n } | Benchmark::Ruggedness { n } => n,
        }
    }

    fn evaluate(&self, x: &Genotype) -> i64 {
        match self {
            Benchmark::OneMax { .. } => onemax_eval(x),
            Benchmark::Ruggedness { .. } => ruggedness_eval(x),
        }
    }

    fn fitness_range(&self) -> (i64, i64) {
        (0, self.size() as i64)
    }

    fn fitness_of_om(&self, om: usize) -> Option<i64> {
        match *self {
            Benchmark::OneMax { .. } => Some(om as i64),
            Benchmark::Ruggedness { n } => Some(ruggedness_of_om(n, om)),
        }
    }
}

/// A problem defined by closures, for fitness functions outside the
/// OM-decomposable family.
pub struct FnProblem<E, R> {
    pub name: String,
    pub n: usize,
    pub range: (i64, i64),
    pub eval: E,
    pub representative: R,
}

impl<E, R> Problem for FnProblem<E, R>
where
    E: Fn(&Genotype) -> i64 + Sync,
    R: Fn(i64) -> Option<Genotype> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn size(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &Genotype) -> i64 {
        (self.eval)(x)
    }

    fn fitness_range(&self) -> (i64, i64) {
        self.range
    }

    fn representative(&self, f: i64) -> Result<Genotype> {
        check_range(self, f)?;
        (self.representative)(f).ok_or(Error::FitnessOutOfRange {
            fitness: f,
            min: self.range.0,
            max: self.range.1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(s: &str) -> Genotype {
        s.parse().unwrap()
    }

    #[test]
    fn onemax_examples() {
        assert_eq!(onemax_eval(&g("1111")), 4);
        assert_eq!(onemax_eval(&g("0000")), 0);
        assert_eq!(onemax_eval(&g("1010")), 2);
    }

    #[test]
    fn ruggedness_examples() {
        assert_eq!(ruggedness_of_om(100, 100), 100);
        assert_eq!(ruggedness_of_om(100, 99), 98);
        assert_eq!(ruggedness_of_om(100, 98), 99);
        assert_eq!(ruggedness_of_om(100, 97), 96);
        assert_eq!(ruggedness_eval(&Genotype::with_ones(100, 97)), 96);
    }

    #[test]
    fn fitness_to_om_examples() {
        let r = Benchmark::ruggedness(100).unwrap();
        assert_eq!(fitness_to_om(&r, 100).unwrap(), 100);
        assert_eq!(fitness_to_om(&r, 99).unwrap(), 98);
        let o = Benchmark::onemax(100).unwrap();
        assert_eq!(fitness_to_om(&o, 37).unwrap(), 37);
        assert!(matches!(
            fitness_to_om(&o, 101),
            Err(Error::FitnessOutOfRange { .. })
        ));
        assert!(fitness_to_om(&o, -1).is_err());
    }

    #[test]
    fn ruggedness_inverse_matches_forward_evaluation() {
        // forward-evaluate over all OM values and invert
        for n in (2..=100).step_by(2) {
            let r = Benchmark::ruggedness(n).unwrap();
            let map = OmMap::new(&r).unwrap();
            for om in 0..=n {
                let f = ruggedness_of_om(n, om);
                assert_eq!(fitness_to_om(&r, f).unwrap(), om);
                assert_eq!(map.om(f), Some(om));
            }
        }
    }

    #[test]
    fn ruggedness_is_bijection_on_levels() {
        for n in (2..=200).step_by(2) {
            let mut seen = vec![false; n + 1];
            for om in 0..=n {
                let f = ruggedness_of_om(n, om);
                assert!((0..=n as i64).contains(&f), "n={n} om={om} f={f}");
                assert!(!seen[f as usize], "n={n}: fitness {f} hit twice");
                seen[f as usize] = true;
            }
        }
    }

    #[test]
    fn ruggedness_rejects_odd_sizes() {
        assert!(Benchmark::ruggedness(5).is_err());
        assert!(Benchmark::ruggedness(0).is_err());
        assert!(Benchmark::by_name("jump", 10).is_err());
    }

    #[test]
    fn representatives() {
        let o = Benchmark::onemax(4).unwrap();
        assert_eq!(o.representative(2).unwrap(), g("1100"));
        assert_eq!(o.representative(4).unwrap(), Genotype::ones(4));
        let r = Benchmark::ruggedness(4).unwrap();
        let x = r.representative(3).unwrap();
        assert_eq!(x.count_ones(), 2);
        assert_eq!(ruggedness_eval(&x), 3);
        assert_eq!(r.representative(4).unwrap(), Genotype::ones(4));
        assert!(r.representative(5).is_err());
        for n in [2, 10, 30, 100] {
            let r = Benchmark::ruggedness(n).unwrap();
            for f in 0..=n as i64 {
                assert_eq!(r.evaluate(&r.representative(f).unwrap()), f);
            }
        }
    }

    #[test]
    fn initial_distribution_examples() {
        let d = initial_fitness_distribution(&Benchmark::onemax(2).unwrap()).unwrap();
        assert_eq!(d.support(), &[0, 1, 2]);
        for (got, want) in d.masses().iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        let d = initial_fitness_distribution(&Benchmark::ruggedness(2).unwrap()).unwrap();
        for (got, want) in d.masses().iter().zip([0.5, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_distribution_normalized() {
        for n in [1, 2, 7, 30, 100, 1000] {
            let d = initial_fitness_distribution(&Benchmark::onemax(n).unwrap()).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12, "n={n}");
            assert!(d.masses().iter().all(|&m| (0.0..=1.0).contains(&m)));
        }
        let d = initial_fitness_distribution(&Benchmark::ruggedness(100).unwrap()).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_initial_distribution_for_custom_problem() {
        let p = FnProblem {
            name: "twice".into(),
            n: 6,
            range: (0, 12),
            eval: |x: &Genotype| 2 * x.count_ones() as i64,
            representative: |f: i64| (f % 2 == 0).then(|| Genotype::with_ones(6, f as usize / 2)),
        };
        assert!(!p.om_decomposable());
        assert!(initial_fitness_distribution(&p).is_err());
        assert_eq!(p.representative(4).unwrap(), Genotype::with_ones(6, 2));
        assert!(p.representative(3).is_err());
        let mut rng = crate::rng::run_stream(1, 0);
        let d = estimate_initial_distribution(&p, 20_000, &mut rng);
        assert!((d.total() - 1.0).abs() < 1e-9);
        // Pr[OM = 3] = 20/64
        assert!((d.mass_at(6) - 20.0 / 64.0).abs() < 0.02);
    }

    proptest! {
        #[test]
        fn ruggedness_stays_within_one_of_onemax(bits in proptest::collection::vec(any::<bool>(), 1..64)) {
            let x = Genotype::new(bits);
            let om = onemax_eval(&x);
            if om < x.len() as i64 {
                prop_assert!((ruggedness_eval(&x) - om).abs() <= 1);
            }
        }
    }
}
