//! Optimal dynamic mutation rates and runtime lower bounds for `(1+λ)` EAs.
//!
//! The crate computes, for every fitness level of a benchmark problem, the
//! expected remaining number of iterations `T[f, p]` when the mutation rate
//! `p` is used at level `f` and optimal rates are used afterwards. Transition
//! probabilities come either from plain Monte Carlo simulation
//! ([`montecarlo`]) or, for problems whose fitness depends on the OneMax value
//! only, from exact combinatorics ([`oracle`]). The resulting tables yield
//! runtime lower bounds, parameter efficiency heatmaps and per-iteration
//! regret of parameter control schemes ([`analysis`]), the latter evaluated on
//! traces produced by [`control`].

pub mod analysis;
pub mod cli;
pub mod control;
pub mod dp;
pub mod error;
pub mod montecarlo;
pub mod mutation;
pub mod oracle;
pub mod problems;
pub mod rng;

mod lnfact;

pub use dp::{DpTables, ExtendedTime, RateGrid};
pub use error::{Error, Result};
pub use problems::{Benchmark, FitnessDistribution, Genotype, Problem};
