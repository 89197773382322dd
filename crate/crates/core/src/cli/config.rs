//! Experiment configuration: a TOML key-value file plus command-line overrides.
//!
//! ```toml
//! seed = 1
//! workers = 8
//! out_dir = "out"
//! problem.name = "ruggedness"
//! problem.n = 100
//! ea.lambda = 512
//! grid.mult_base = 1e-4
//! grid.mult_alpha = 1.0964781961431851
//! grid.mult_count = 101
//! mc.iterations = 1000000
//! mc.successes = 50000
//! policy.kind = "two-rate"
//! policy.p_min = "1/n^2"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::control::{ControlPolicy, PMinPreset, PolicyKind, DEFAULT_P_MAX};
use crate::dp::{AdditiveGrid, GridSpec, MultiplicativeGrid};
use crate::error::{Error, Result};
use crate::montecarlo::McConfig;
use crate::problems::Benchmark;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub provider: Option<String>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub ea: EaSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub tworate: TwoRateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: Option<String>,
    pub n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EaSection {
    pub lambda: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub mult_base: Option<f64>,
    pub mult_alpha: Option<f64>,
    pub mult_count: Option<usize>,
    pub add_base: Option<f64>,
    pub add_step: Option<f64>,
    pub add_count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub iterations: Option<u64>,
    pub successes: Option<u64>,
    pub seed: Option<u64>,
}

/// A number, or one of the presets `"1/n"` and `"1/n^2"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RateValue {
    Value(f64),
    Preset(String),
}

impl RateValue {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        match self {
            RateValue::Value(v) => Ok(*v),
            RateValue::Preset(s) => match s.as_str() {
                "1/n" => Ok(PMinPreset::Linear.value(n)),
                "1/n^2" | "1/n2" => Ok(PMinPreset::Quadratic.value(n)),
                other => other
                    .parse()
                    .map_err(|_| Error::Config(format!("cannot read rate '{other}'"))),
            },
        }
    }
}

impl std::str::FromStr for RateValue {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<f64>() {
            Ok(v) => RateValue::Value(v),
            Err(_) => RateValue::Preset(s.to_string()),
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: Option<String>,
    /// Rate of the static policy.
    pub rate: Option<RateValue>,
    pub p_min: Option<RateValue>,
    pub p_max: Option<RateValue>,
    pub runs: Option<usize>,
    pub budget: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoRateSection {
    pub clamp_offspring: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    MonteCarlo,
    Exact,
}

impl std::str::FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" | "montecarlo" => Ok(ProviderKind::MonteCarlo),
            "exact" => Ok(ProviderKind::Exact),
            other => Err(Error::Config(format!("unknown provider '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub rate: RateValue,
    pub p_min: RateValue,
    pub p_max: RateValue,
    pub clamp_offspring: bool,
}

impl PolicySpec {
    pub fn build(&self, n: usize) -> Result<ControlPolicy> {
        let policy = match self.kind {
            PolicyKind::Static => ControlPolicy::static_rate(self.rate.resolve(n)?),
            PolicyKind::AbRule => {
                ControlPolicy::ab_rule(n, self.p_min.resolve(n)?, self.p_max.resolve(n)?)
            }
            PolicyKind::TwoRate => {
                ControlPolicy::two_rate(n, self.p_min.resolve(n)?, self.p_max.resolve(n)?)
            }
        };
        Ok(policy
            .map_err(|e| Error::Config(e.to_string()))?
            .with_clamped_offspring(self.clamp_offspring))
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub n: usize,
    pub lambda: usize,
    pub grid: GridSpec,
    pub mc: McConfig,
    pub provider: ProviderKind,
    pub policy: PolicySpec,
    pub runs: usize,
    pub budget: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "ruggedness".into(),
            n: 100,
            lambda: 512,
            grid: GridSpec::default(),
            mc: McConfig::default(),
            provider: ProviderKind::MonteCarlo,
            policy: PolicySpec {
                kind: PolicyKind::Static,
                rate: RateValue::Preset("1/n".into()),
                p_min: RateValue::Preset("1/n^2".into()),
                p_max: RateValue::Value(DEFAULT_P_MAX),
                clamp_offspring: false,
            },
            runs: 100,
            budget: 10_000_000,
            out_dir: PathBuf::from("out"),
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            seed: 0,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub lambda: Option<usize>,
    pub provider: Option<ProviderKind>,
    pub iterations: Option<u64>,
    pub successes: Option<u64>,
    pub policy: Option<PolicyKind>,
    pub rate: Option<RateValue>,
    pub p_min: Option<RateValue>,
    pub p_max: Option<RateValue>,
    pub runs: Option<usize>,
    pub budget: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, ov: Overrides) -> Result<Self> {
        let d = RunConfig::default();
        let seed = ov.seed.or(file.seed).unwrap_or(d.seed);
        let mc_seed = ov.seed.or(file.mc.seed).unwrap_or(seed);

        let defaults = d.grid;
        let dm = defaults.multiplicative.unwrap();
        let g = &file.grid;
        let has_mult = g.mult_base.is_some() || g.mult_alpha.is_some() || g.mult_count.is_some();
        let has_add = g.add_base.is_some() || g.add_step.is_some() || g.add_count.is_some();
        let multiplicative = if has_mult || !has_add {
            Some(MultiplicativeGrid {
                base: g.mult_base.unwrap_or(dm.base),
                alpha: g.mult_alpha.unwrap_or(dm.alpha),
                count: g.mult_count.unwrap_or(dm.count),
            })
        } else {
            None
        };
        let additive = if has_add {
            Some(AdditiveGrid {
                base: g.add_base.ok_or_else(|| Error::Config("grid.add_base missing".into()))?,
                step: g.add_step.ok_or_else(|| Error::Config("grid.add_step missing".into()))?,
                count: g.add_count.ok_or_else(|| Error::Config("grid.add_count missing".into()))?,
            })
        } else {
            None
        };

        let provider = match (ov.provider, file.provider) {
            (Some(p), _) => p,
            (None, Some(s)) => s.parse()?,
            (None, None) => d.provider,
        };
        let kind = match (ov.policy, file.policy.kind) {
            (Some(k), _) => k,
            (None, Some(s)) => s.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            (None, None) => d.policy.kind,
        };

        let cfg = RunConfig {
            problem: ov.problem.or(file.problem.name).unwrap_or(d.problem),
            n: ov.n.or(file.problem.n).unwrap_or(d.n),
            lambda: ov.lambda.or(file.ea.lambda).unwrap_or(d.lambda),
            grid: GridSpec {
                multiplicative,
                additive,
            },
            mc: McConfig {
                iterations: ov.iterations.or(file.mc.iterations).unwrap_or(d.mc.iterations),
                successes: ov.successes.or(file.mc.successes).unwrap_or(d.mc.successes),
                seed: mc_seed,
            },
            provider,
            policy: PolicySpec {
                kind,
                rate: ov.rate.or(file.policy.rate).unwrap_or(d.policy.rate),
                p_min: ov.p_min.or(file.policy.p_min).unwrap_or(d.policy.p_min),
                p_max: ov.p_max.or(file.policy.p_max).unwrap_or(d.policy.p_max),
                clamp_offspring: file
                    .tworate
                    .clamp_offspring
                    .unwrap_or(d.policy.clamp_offspring),
            },
            runs: ov.runs.or(file.policy.runs).unwrap_or(d.runs),
            budget: ov.budget.or(file.policy.budget).unwrap_or(d.budget),
            out_dir: ov.out_dir.or(file.out_dir).unwrap_or(d.out_dir),
            workers: ov.workers.or(file.workers).unwrap_or(d.workers),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |e: Error| Error::Config(e.to_string());
        self.benchmark().map_err(bad)?;
        if self.lambda == 0 {
            return Err(Error::Config("ea.lambda must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.runs == 0 || self.budget == 0 {
            return Err(Error::Config("policy.runs and policy.budget must be positive".into()));
        }
        self.mc.validate()?;
        self.grid.rates().map_err(bad)?;
        self.policy.build(self.n)?;
        if self.policy.kind == PolicyKind::TwoRate && !self.lambda.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "two-rate policy needs an even lambda, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn benchmark(&self) -> Result<Benchmark> {
        Benchmark::by_name(&self.problem, self.n)
    }
}
