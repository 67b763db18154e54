//! Joint-hypergeometric baseline for the committee-takeover probability.
//!
//! [`jhda_exact`] enumerates every vector `(m_1, …, m_λ)` with
//! `0 ≤ m_i ≤ ⌊nr⌋` and `Σ m_i = M'`, summing `Π C(n, m_i)`. It counts the
//! same set as the generating-function coefficient, by a different route,
//! and its cost grows as `(⌊nr⌋ + 1)^λ`. [`jhda_trials`] estimates the same
//! probability by sampling placements.

use num::bigint::BigUint;
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactmath::{choose, ExactProb};
use crate::params::{CommitteeLayout, NetworkParams};

/// Default cap on enumerated states for [`jhda_exact`].
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Name of the generator behind every sampled estimate.
pub const GENERATOR: &str = "ChaCha8Rng";

/// Trials per independently seeded block. Fixed so results do not depend on
/// the number of worker threads.
pub(crate) const BLOCK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JhdaError {
    #[error(
        "exact enumeration needs {states} states, over the budget of {budget}; use PGFA or trials"
    )]
    BudgetExceeded { states: u128, budget: u128 },
}

/// `(⌊nr⌋ + 1)^λ`, saturating.
pub fn state_count(layout: &CommitteeLayout) -> u128 {
    let per = layout.capacity.min(layout.size) as u128 + 1;
    let mut states: u128 = 1;
    for _ in 0..layout.committees {
        states = states.saturating_mul(per);
    }
    states
}

/// Exact `P'` by enumerating per-committee Sybil counts.
pub fn jhda_exact(params: &NetworkParams, budget: u128) -> Result<ExactProb, JhdaError> {
    jhda_exact_layout(&params.layout(), budget)
}

pub fn jhda_exact_layout(layout: &CommitteeLayout, budget: u128) -> Result<ExactProb, JhdaError> {
    let states = state_count(layout);
    if states > budget {
        return Err(JhdaError::BudgetExceeded { states, budget });
    }
    let total = choose(layout.slots(), layout.sybils);
    if total.is_zero() {
        return Ok(ExactProb::one());
    }
    let cap = layout.capacity.min(layout.size);
    let ways: Vec<BigUint> = (0..=cap).map(|i| choose(layout.size, i)).collect();
    let safe = enumerate(&ways, cap, layout.committees, layout.sybils, &BigUint::one());
    Ok(ExactProb::from_ratio(safe, total)
        .expect("safe placements are a subset of all placements")
        .complement())
}

// Sum over compositions of `remaining` into `committees` parts, each at most
// `cap`, of the product of `ways[part]`, scaled by `prefix`.
fn enumerate(ways: &[BigUint], cap: u64, committees: u64, remaining: u64, prefix: &BigUint) -> BigUint {
    if committees == 0 {
        return if remaining == 0 {
            prefix.clone()
        } else {
            BigUint::zero()
        };
    }
    let mut sum = BigUint::zero();
    for m in 0..=cap.min(remaining) {
        let rest = remaining - m;
        if rest > cap * (committees - 1) {
            continue;
        }
        sum += enumerate(ways, cap, committees - 1, rest, &(prefix * &ways[m as usize]));
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("trials must be at least 1")]
pub struct NoTrials;

impl TrialConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self, NoTrials> {
        if trials == 0 {
            return Err(NoTrials);
        }
        Ok(TrialConfig { trials, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialEstimate {
    pub trials: u64,
    pub failures: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub seed: u64,
    pub generator: &'static str,
}

impl TrialEstimate {
    pub(crate) fn from_counts(trials: u64, failures: u64, seed: u64) -> Self {
        let p_hat = failures as f64 / trials as f64;
        TrialEstimate {
            trials,
            failures,
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            seed,
            generator: GENERATOR,
        }
    }
}

/// Generator for block `index` of a run seeded with `seed`.
pub(crate) fn block_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `(start, len)` for each fixed-size block covering `total` items.
pub(crate) fn blocks(total: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(BLOCK))
        .map(|b| (b, BLOCK.min(total - b * BLOCK)))
        .collect()
}

/// Uniformly picks `picks` distinct positions of `slots` by a partial
/// Fisher–Yates shuffle; the chosen entries end up in `slots[..picks]`.
///
/// `slots` may hold any permutation from an earlier call, so it never needs
/// resetting between trials.
pub(crate) fn partial_shuffle<R: Rng>(rng: &mut R, slots: &mut [u32], picks: usize) {
    let len = slots.len();
    for i in 0..picks {
        let j = rng.gen_range(i..len);
        slots.swap(i, j);
    }
}

/// Places `picks` Sybil markers uniformly among the `slots` and tallies them
/// per committee; slot `s` belongs to committee `s / size`, and slots at or
/// beyond `committees * size` belong to no committee.
pub(crate) fn place_sybils<R: Rng>(
    rng: &mut R,
    slots: &mut [u32],
    picks: usize,
    size: u32,
    counts: &mut [u32],
) {
    counts.iter_mut().for_each(|c| *c = 0);
    partial_shuffle(rng, slots, picks);
    for &s in &slots[..picks] {
        if let Some(c) = counts.get_mut((s / size) as usize) {
            *c += 1;
        }
    }
}

/// Monte-Carlo estimate of `P'`: each trial seats `M'` Sybil IDs uniformly
/// among the `λn` committee slots and fails if any committee exceeds `⌊nr⌋`.
pub fn jhda_trials(params: &NetworkParams, cfg: TrialConfig) -> TrialEstimate {
    jhda_trials_layout(&params.layout(), cfg)
}

pub fn jhda_trials_layout(layout: &CommitteeLayout, cfg: TrialConfig) -> TrialEstimate {
    let slots = layout.slots();
    if layout.sybils > slots {
        return TrialEstimate::from_counts(cfg.trials, cfg.trials, cfg.seed);
    }
    let failures: u64 = blocks(cfg.trials)
        .into_par_iter()
        .map(|(index, len)| {
            let mut rng = block_rng(cfg.seed, index);
            let mut slot_ids: Vec<u32> = (0..slots as u32).collect();
            let mut counts = vec![0u32; layout.committees as usize];
            let mut failures = 0u64;
            for _ in 0..len {
                place_sybils(
                    &mut rng,
                    &mut slot_ids,
                    layout.sybils as usize,
                    layout.size as u32,
                    &mut counts,
                );
                if counts.iter().any(|&c| c as u64 > layout.capacity) {
                    failures += 1;
                }
            }
            failures
        })
        .sum();
    TrialEstimate::from_counts(cfg.trials, failures, cfg.seed)
}
