//! Shift mutation: a binomial flip count with the mass of `k = 0` moved to
//! `k = 1`, followed by flipping `k` distinct uniformly chosen bits.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::lnfact::LnFactorials;
use crate::problems::Genotype;

fn check_rate(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidRate(p));
    }
    Ok(())
}

fn binomial_pmf_with(lf: &LnFactorials, n: usize, p: f64, k: usize) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (lf.ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// `Pr[k]` under the shift-binomial law `B_{0→1}(n, p)`.
pub fn shift_binomial_pmf(n: usize, p: f64, k: usize) -> Result<f64> {
    check_rate(p)?;
    if k > n {
        return Err(Error::InvalidFlipCount { k, n });
    }
    let lf = LnFactorials::new(n);
    Ok(match k {
        0 => 0.0,
        1 => binomial_pmf_with(&lf, n, p, 0) + binomial_pmf_with(&lf, n, p, 1),
        _ => binomial_pmf_with(&lf, n, p, k),
    })
}

/// The flip-count distribution `B_{0→1}(n, p)`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftBinomial {
    n: usize,
    p: f64,
    sampler: Binomial,
}

impl ShiftBinomial {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        check_rate(p)?;
        let sampler = Binomial::new(n as u64, p).map_err(|_| Error::InvalidRate(p))?;
        Ok(Self { n, p, sampler })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.p
    }

    /// The full pmf over `k ∈ [0..=n]`.
    pub fn pmf_vec(&self) -> Vec<f64> {
        let lf = LnFactorials::new(self.n);
        self.pmf_vec_with(&lf)
    }

    pub(crate) fn pmf_vec_with(&self, lf: &LnFactorials) -> Vec<f64> {
        let mut pmf: Vec<f64> = (0..=self.n)
            .map(|k| binomial_pmf_with(lf, self.n, self.p, k))
            .collect();
        if self.n > 0 {
            pmf[1] += pmf[0];
            pmf[0] = 0.0;
        }
        pmf
    }

    /// Samples `k ∈ [1..=n]` (for `n ≥ 1`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        (self.sampler.sample(rng) as usize).max(1).min(self.n)
    }
}

/// Partial Fisher–Yates sampler of `k`-subsets of `[0..n)`.
///
/// The index array is left permuted between calls; any permutation is a valid
/// starting state, so no reset is needed.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    idx: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(n: usize) -> Self {
        Self {
            idx: (0..n).collect(),
        }
    }

    /// Returns `k` distinct uniformly chosen indices.
    pub fn sample<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> &[usize] {
        let n = self.idx.len();
        debug_assert!(k <= n);
        for i in 0..k {
            let j = rng.random_range(i..n);
            self.idx.swap(i, j);
        }
        &self.idx[..k]
    }

    /// Flips `k` distinct uniformly chosen bits of `x` in place.
    pub fn flip_in_place<R: Rng + ?Sized>(&mut self, x: &mut Genotype, k: usize, rng: &mut R) {
        for &i in self.sample(k, rng) {
            x.flip(i);
        }
    }
}

/// Returns a copy of `x` with exactly `k` distinct uniformly chosen bits inverted.
pub fn flip_k_bits<R: Rng + ?Sized>(x: &Genotype, k: usize, rng: &mut R) -> Result<Genotype> {
    if k > x.len() {
        return Err(Error::InvalidFlipCount { k, n: x.len() });
    }
    let mut y = x.clone();
    SubsetSampler::new(x.len()).flip_in_place(&mut y, k, rng);
    Ok(y)
}
