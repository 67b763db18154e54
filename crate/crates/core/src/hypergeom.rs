//! Hypergeometric selection of Sybil IDs from the ID Pool into the ID
//! Selection Pool.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::exactmath::{choose, ExactProb};
use crate::params::NetworkParams;

/// `draws` items taken without replacement from `population`, of which
/// `successes` are marked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HypergeomSpec {
    population: u64,
    successes: u64,
    draws: u64,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum HypergeomError {
    #[error("successes exceed population ({successes} > {population})")]
    TooManySuccesses { successes: u64, population: u64 },
    #[error("draws exceed population ({draws} > {population})")]
    TooManyDraws { draws: u64, population: u64 },
}

impl HypergeomSpec {
    pub fn new(population: u64, successes: u64, draws: u64) -> Result<Self, HypergeomError> {
        if successes > population {
            return Err(HypergeomError::TooManySuccesses {
                successes,
                population,
            });
        }
        if draws > population {
            return Err(HypergeomError::TooManyDraws { draws, population });
        }
        Ok(HypergeomSpec {
            population,
            successes,
            draws,
        })
    }

    /// `Λ` IDs, `M` of them Sybil, `K` drawn into the selection pool.
    pub fn from_params(params: &NetworkParams) -> Self {
        HypergeomSpec {
            population: params.id_pool(),
            successes: params.sybil_ids(),
            draws: params.selection_pool(),
        }
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Smallest and largest attainable success counts.
    pub fn support(&self) -> (u64, u64) {
        let failures = self.population - self.successes;
        let lo = self.draws.saturating_sub(failures);
        let hi = self.successes.min(self.draws);
        (lo, hi)
    }

    /// Number of draws with exactly `m` successes.
    pub fn count_exact(&self, m: u64) -> BigUint {
        if m > self.draws {
            return BigUint::default();
        }
        choose(self.successes, m) * choose(self.population - self.successes, self.draws - m)
    }

    /// `C(Λ, K)`, the number of equally likely draws.
    pub fn total_count(&self) -> BigUint {
        choose(self.population, self.draws)
    }

    /// Number of draws with at least `m` successes.
    pub fn count_at_least(&self, m: u64) -> BigUint {
        let (lo, hi) = self.support();
        if m > hi {
            return BigUint::default();
        }
        if m <= lo {
            return self.total_count();
        }
        (m..=hi).map(|s| self.count_exact(s)).sum()
    }
}

/// `P(X = m)`.
pub fn pmf(spec: &HypergeomSpec, m: u64) -> ExactProb {
    ExactProb::from_ratio(spec.count_exact(m), spec.total_count())
        .expect("hypergeometric count is bounded by C(population, draws)")
}

/// `P(X >= m)`, summed over the non-zero support only.
pub fn tail_at_least(spec: &HypergeomSpec, m: u64) -> ExactProb {
    ExactProb::from_ratio(spec.count_at_least(m), spec.total_count())
        .expect("hypergeometric tail is bounded by C(population, draws)")
}

/// How the pool-breach threshold is derived from `R` and `K`.
///
/// The pool is breached when the Sybil count reaches the returned count.
/// `Strict` (more than `⌊R·K⌋` Sybil IDs) is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// At least `⌊R·K⌋`.
    #[serde(rename = "floor_RK")]
    FloorRk,
    /// More than `⌊R·K⌋`.
    #[default]
    Strict,
    /// At least `⌈R·K⌉`.
    Ceil,
}

impl ThresholdMode {
    pub fn threshold(self, params: &NetworkParams) -> u64 {
        let k = params.selection_pool();
        let r = params.pool_resiliency();
        match self {
            ThresholdMode::FloorRk => r.floor_times(k),
            ThresholdMode::Strict => r.floor_times(k) + 1,
            ThresholdMode::Ceil => r.ceil_times(k),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::FloorRk => "floor_RK",
            ThresholdMode::Strict => "strict",
            ThresholdMode::Ceil => "ceil",
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "floor_RK" | "floor_rk" => Ok(ThresholdMode::FloorRk),
            "strict" => Ok(ThresholdMode::Strict),
            "ceil" => Ok(ThresholdMode::Ceil),
            other => Err(format!(
                "unknown threshold mode {other:?} (expected floor_RK, strict or ceil)"
            )),
        }
    }
}

/// `𝒫`: probability that the selection pool is breached under `mode`.
pub fn pool_breach_prob(params: &NetworkParams, mode: ThresholdMode) -> ExactProb {
    tail_at_least(&HypergeomSpec::from_params(params), mode.threshold(params))
}
