//! Monte-Carlo model of a whole epoch: selection-pool draw followed by random
//! committee assignment.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::jhda::{block_rng, blocks, partial_shuffle, place_sybils, GENERATOR};
use crate::params::NetworkParams;

/// How many Sybil IDs reach the committees each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Exactly `M'` Sybil IDs over the `λn` committee slots, as the analytic
    /// takeover probability assumes.
    #[default]
    Fixed,
    /// The Sybil count drawn into the pool this epoch, spread over all `K`
    /// pool slots; leftover slots count toward no committee.
    Sampled,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Fixed => "fixed",
            SimMode::Sampled => "sampled",
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(SimMode::Fixed),
            "sampled" => Ok(SimMode::Sampled),
            other => Err(format!(
                "unknown simulation mode {other:?} (expected fixed or sampled)"
            )),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("epochs must be at least 1")]
pub struct NoEpochs;

/// Tallies from a simulation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub epochs: u64,
    /// Epochs whose selection pool held at least `threshold` Sybil IDs.
    pub pool_breaches: u64,
    /// Epochs in which some committee exceeded its capacity.
    pub takeover_failures: u64,
    /// Epochs with both of the above.
    pub joint_failures: u64,
    /// `committee_histogram[c]` counts (epoch, committee) pairs holding
    /// exactly `c` Sybil IDs.
    pub committee_histogram: Vec<u64>,
    /// Sum over epochs of the Sybil count drawn into the pool.
    pub pool_sybils_total: u64,
    pub threshold: u64,
    pub mode: SimMode,
    pub seed: u64,
    pub generator: &'static str,
}

impl SimOutcome {
    pub fn takeover_rate(&self) -> f64 {
        self.takeover_failures as f64 / self.epochs as f64
    }

    pub fn breach_rate(&self) -> f64 {
        self.pool_breaches as f64 / self.epochs as f64
    }

    pub fn joint_rate(&self) -> f64 {
        self.joint_failures as f64 / self.epochs as f64
    }

    /// Mean Sybil count per committee over all epochs and committees.
    pub fn mean_committee_sybils(&self) -> f64 {
        let (weighted, total) = self
            .committee_histogram
            .iter()
            .enumerate()
            .fold((0u128, 0u128), |(w, t), (c, &f)| {
                (w + c as u128 * f as u128, t + f as u128)
            });
        weighted as f64 / total as f64
    }

    /// Histogram as CSV with header `committee_sybil_count,frequency`.
    pub fn write_histogram_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["committee_sybil_count", "frequency"])?;
        for (count, freq) in self.committee_histogram.iter().enumerate() {
            w.write_record([count.to_string(), freq.to_string()])?;
        }
        w.flush()
    }
}

#[derive(Default)]
struct Tally {
    pool_breaches: u64,
    takeover_failures: u64,
    joint_failures: u64,
    pool_sybils_total: u64,
    histogram: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.pool_breaches += other.pool_breaches;
        self.takeover_failures += other.takeover_failures;
        self.joint_failures += other.joint_failures;
        self.pool_sybils_total += other.pool_sybils_total;
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self
    }
}

/// Runs `epochs` independent epochs.
///
/// Each epoch draws `K` of the `Λ` IDs (the first `M` are Sybil), records a
/// pool breach when the drawn Sybil count reaches `threshold`, then seats the
/// Sybil IDs according to `mode` and records a takeover if any committee
/// holds more than `⌊nr⌋`. Deterministic for a given seed.
pub fn simulate_epochs(
    params: &NetworkParams,
    epochs: u64,
    threshold: u64,
    seed: u64,
    mode: SimMode,
) -> Result<SimOutcome, NoEpochs> {
    if epochs == 0 {
        return Err(NoEpochs);
    }
    let id_pool = params.id_pool() as usize;
    let sybil_ids = params.sybil_ids() as u32;
    let draws = params.selection_pool() as usize;
    // Drawing the complement is cheaper when K > Λ/2.
    let use_complement = draws * 2 > id_pool;
    let picks = if use_complement { id_pool - draws } else { draws };

    let layout = params.layout();
    let committees = layout.committees as usize;
    let size = layout.size as u32;
    let slot_count = match mode {
        SimMode::Fixed => layout.slots() as usize,
        SimMode::Sampled => draws,
    };

    let tally = blocks(epochs)
        .into_par_iter()
        .map(|(index, len)| {
            let mut rng = block_rng(seed, index);
            let mut ids: Vec<u32> = (0..id_pool as u32).collect();
            let mut slots: Vec<u32> = (0..slot_count as u32).collect();
            let mut counts = vec![0u32; committees];
            let mut t = Tally {
                histogram: vec![0; layout.size as usize + 1],
                ..Tally::default()
            };
            for _ in 0..len {
                partial_shuffle(&mut rng, &mut ids, picks);
                let hit = ids[..picks].iter().filter(|&&id| id < sybil_ids).count() as u64;
                let drawn = if use_complement {
                    sybil_ids as u64 - hit
                } else {
                    hit
                };
                t.pool_sybils_total += drawn;
                let breach = drawn >= threshold;

                let seated = match mode {
                    SimMode::Fixed => layout.sybils,
                    SimMode::Sampled => drawn,
                };
                let takeover = if seated as usize > slot_count {
                    counts.iter_mut().for_each(|c| *c = size);
                    true
                } else {
                    place_sybils(&mut rng, &mut slots, seated as usize, size, &mut counts);
                    counts.iter().any(|&c| c as u64 > layout.capacity)
                };
                for &c in &counts {
                    t.histogram[c as usize] += 1;
                }
                t.pool_breaches += breach as u64;
                t.takeover_failures += takeover as u64;
                t.joint_failures += (breach && takeover) as u64;
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    Ok(SimOutcome {
        epochs,
        pool_breaches: tally.pool_breaches,
        takeover_failures: tally.takeover_failures,
        joint_failures: tally.joint_failures,
        committee_histogram: tally.histogram,
        pool_sybils_total: tally.pool_sybils_total,
        threshold,
        mode,
        seed,
        generator: GENERATOR,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::params::{Fraction, RawScenario};

    fn small(m: u64, m_sel: u64) -> NetworkParams {
        NetworkParams::validate(&RawScenario {
            nodes: 40,
            selection_pool: 30,
            sybil_ids: m,
            selected_sybils: m_sel,
            n: 10,
            r: Fraction::new(1, 3),
            pool_resiliency: Fraction::new(1, 5),
            rounds_per_year: 365,
            label: None,
            lambda: None,
        })
        .unwrap()
    }

    #[test]
    fn no_sybils_means_no_failures() {
        let out = simulate_epochs(&small(0, 0), 5_000, 7, 1, SimMode::Fixed).unwrap();
        assert_eq!(out.pool_breaches, 0);
        assert_eq!(out.takeover_failures, 0);
        assert_eq!(out.joint_failures, 0);
        assert_eq!(out.pool_sybils_total, 0);
        assert_eq!(out.committee_histogram[0], 5_000 * 3);
    }

    #[test]
    fn zero_threshold_always_breaches() {
        let out = simulate_epochs(&small(10, 5), 3_000, 0, 4, SimMode::Sampled).unwrap();
        assert_eq!(out.pool_breaches, 3_000);
    }

    #[test]
    fn tally_invariants() {
        for mode in [SimMode::Fixed, SimMode::Sampled] {
            let out = simulate_epochs(&small(12, 9), 20_000, 6, 11, mode).unwrap();
            assert!(out.joint_failures <= out.pool_breaches.min(out.takeover_failures));
            assert!(out.pool_breaches <= out.epochs && out.takeover_failures <= out.epochs);
            assert_eq!(out.committee_histogram.iter().sum::<u64>(), out.epochs * 3);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let p = small(12, 9);
        let a = simulate_epochs(&p, 40_000, 6, 5, SimMode::Sampled).unwrap();
        let b = simulate_epochs(&p, 40_000, 6, 5, SimMode::Sampled).unwrap();
        assert_eq!(a, b);
        assert!(simulate_epochs(&p, 0, 6, 5, SimMode::Fixed).is_err());
    }

    #[test]
    fn histogram_csv() {
        let out = simulate_epochs(&small(0, 0), 10, 7, 1, SimMode::Fixed).unwrap();
        let mut buf = Vec::new();
        out.write_histogram_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("committee_sybil_count,frequency\n0,30\n1,0\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("fixed".parse::<SimMode>(), Ok(SimMode::Fixed));
        assert_eq!("sampled".parse::<SimMode>(), Ok(SimMode::Sampled));
        assert!("other".parse::<SimMode>().is_err());
    }
}
