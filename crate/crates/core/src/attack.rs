//! Successful-attack probability, epoch failure, years-to-fail and the
//! first-shard-times-λ comparator.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::exactmath::{choose, to_fixed, to_scientific, BigRatio, ExactProb};
use crate::genpoly::{pgfa_failure_prob_with, SlotModel};
use crate::hypergeom::{tail_at_least, HypergeomSpec, ThresholdMode};
use crate::jhda::{jhda_exact, jhda_trials, JhdaError, TrialConfig};
use crate::params::{Fraction, NetworkParams, RawScenario};

/// Default years-to-fail at or above which a configuration is called secure.
pub const DEFAULT_SECURE_YEARS: u64 = 1000;

/// `P'' = P(X ≥ threshold) · P'`.
pub fn successful_attack_prob(params: &NetworkParams, threshold: u64) -> ExactProb {
    successful_attack_prob_with(params, threshold, SlotModel::default())
}

pub fn successful_attack_prob_with(
    params: &NetworkParams,
    threshold: u64,
    model: SlotModel,
) -> ExactProb {
    let pool = tail_at_least(&HypergeomSpec::from_params(params), threshold);
    if pool.is_zero() {
        return pool;
    }
    pool.mul(&pgfa_failure_prob_with(params, model))
}

/// A non-negative rational that may be infinite (an expectation over a
/// zero-probability event).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Finite(BigRatio),
    Infinite,
}

impl Expectation {
    /// Two decimals, or `"inf"`.
    pub fn to_fixed2(&self) -> String {
        match self {
            Expectation::Finite(r) => to_fixed(r, 2),
            Expectation::Infinite => "inf".to_string(),
        }
    }

    /// Two decimals for values in `[1, 10^6)`, three significant digits in
    /// scientific form otherwise.
    pub fn display(&self) -> String {
        match self {
            Expectation::Finite(r) => {
                let one = BigRatio::from_integer(1u32.into());
                let million = BigRatio::from_integer(1_000_000u32.into());
                if r >= &one && r < &million {
                    to_fixed(r, 2)
                } else {
                    to_scientific(r, 3)
                }
            }
            Expectation::Infinite => "inf".to_string(),
        }
    }

    pub fn to_scientific(&self, sig_digits: usize) -> String {
        match self {
            Expectation::Finite(r) => to_scientific(r, sig_digits),
            Expectation::Infinite => "inf".to_string(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Expectation::Finite(r) => crate::exactmath::ratio_to_f64(r),
            Expectation::Infinite => f64::INFINITY,
        }
    }

    pub fn at_least(&self, bound: &BigRatio) -> bool {
        match self {
            Expectation::Finite(r) => r >= bound,
            Expectation::Infinite => true,
        }
    }
}

impl PartialOrd for Expectation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use Expectation::*;
        Some(match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => std::cmp::Ordering::Less,
            (Infinite, Finite(_)) => std::cmp::Ordering::Greater,
            (Infinite, Infinite) => std::cmp::Ordering::Equal,
        })
    }
}

/// `E_s = 1 / p_fail`, the expected number of sharding rounds until failure.
pub fn expected_rounds(p_fail: &ExactProb) -> Expectation {
    if p_fail.is_zero() {
        Expectation::Infinite
    } else {
        Expectation::Finite(p_fail.as_ratio().recip())
    }
}

/// `A = 1 / (p_fail · N_s)` years.
pub fn years_to_fail(p_fail: &ExactProb, rounds_per_year: u64) -> Expectation {
    assert!(rounds_per_year >= 1, "N_s must be at least 1");
    match expected_rounds(p_fail) {
        Expectation::Finite(rounds) => {
            Expectation::Finite(rounds / BigRatio::from_integer(BigUint::from(rounds_per_year)))
        }
        Expectation::Infinite => Expectation::Infinite,
    }
}

/// `p_e = P · P'` with `P'` from exact enumeration.
pub fn epoch_failure_jhda(
    params: &NetworkParams,
    threshold: u64,
    budget: u128,
) -> Result<ExactProb, JhdaError> {
    let pool = tail_at_least(&HypergeomSpec::from_params(params), threshold);
    let takeover = jhda_exact(params, budget)?;
    Ok(pool.mul(&takeover))
}

/// Failure probability of the first committee, multiplied by `λ`.
///
/// Returns `λ · Σ_{i=⌊nr⌋+1}^{min(n, M')} C(M', i) C(K - M', n - i) / C(K, n)`.
/// This is Boole's bound on the takeover probability, not a probability,
/// and it is left unclamped so values above 1 stay visible.
pub fn bcp_comparator(params: &NetworkParams) -> BigRatio {
    let k = params.selection_pool();
    let n = params.committee_size();
    let m = params.selected_sybils();
    let cap = params.committee_capacity();
    let hits: BigUint = (cap + 1..=n.min(m))
        .map(|i| choose(m, i) * choose(k - m, n - i))
        .sum();
    let single = BigRatio::new(hits, choose(k, n));
    single * BigRatio::from_integer(BigUint::from(params.committees()))
}

/// Which route produced `P'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "PGFA")]
    Pgfa,
    #[serde(rename = "JHDA-exact")]
    JhdaExact,
    #[serde(rename = "JHDA-trials")]
    JhdaTrials,
    #[serde(rename = "BCP")]
    Bcp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pgfa => "PGFA",
            Method::JhdaExact => "JHDA-exact",
            Method::JhdaTrials => "JHDA-trials",
            Method::Bcp => "BCP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pgfa" => Ok(Method::Pgfa),
            "jhda-exact" | "jhda_exact" => Ok(Method::JhdaExact),
            "jhda-trials" | "jhda_trials" => Ok(Method::JhdaTrials),
            "bcp" => Ok(Method::Bcp),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Jhda(#[from] JhdaError),
    #[error("BCP yields a bound, not a probability; use bcp_comparator")]
    BcpIsNotAProbability,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub threshold_mode: ThresholdMode,
    pub slot_model: SlotModel,
    pub method: Method,
    pub jhda_budget: u128,
    pub trials: TrialConfig,
    pub secure_years: BigRatio,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            threshold_mode: ThresholdMode::default(),
            slot_model: SlotModel::default(),
            method: Method::Pgfa,
            jhda_budget: crate::jhda::DEFAULT_BUDGET,
            trials: TrialConfig {
                trials: 1_000_000,
                seed: 0,
            },
            secure_years: BigRatio::from_integer(BigUint::from(DEFAULT_SECURE_YEARS)),
        }
    }
}

/// Everything computed for one scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityReport {
    pub params: NetworkParams,
    pub threshold: u64,
    pub threshold_mode: ThresholdMode,
    /// `𝒫`: selection pool breached.
    pub pool_breach: ExactProb,
    /// `𝒫'`: at least one committee taken over.
    pub takeover: ExactProb,
    /// `𝒫''`: successful attack.
    pub attack: ExactProb,
    /// `p_e`: epoch failure probability.
    pub epoch_failure: ExactProb,
    pub expected_rounds: Expectation,
    pub years: Expectation,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSummary {
    pub report: SecurityReport,
    pub secure: bool,
    pub secure_threshold_years: BigRatio,
}

/// Computes the full report for one validated scenario.
pub fn analyze(params: &NetworkParams, opts: &AnalysisOptions) -> Result<AttackSummary, AnalysisError> {
    let threshold = opts.threshold_mode.threshold(params);
    let pool_breach = tail_at_least(&HypergeomSpec::from_params(params), threshold);
    let takeover = match opts.method {
        Method::Pgfa => pgfa_failure_prob_with(params, opts.slot_model),
        Method::JhdaExact => jhda_exact(params, opts.jhda_budget)?,
        Method::JhdaTrials => {
            let est = jhda_trials(params, opts.trials);
            ExactProb::from_ratio_u64(est.failures, est.trials)
                .expect("failures never exceed trials")
        }
        Method::Bcp => return Err(AnalysisError::BcpIsNotAProbability),
    };
    let attack = pool_breach.mul(&takeover);
    let expected_rounds = expected_rounds(&attack);
    let years = years_to_fail(&attack, params.rounds_per_year());
    let secure = years.at_least(&opts.secure_years);
    Ok(AttackSummary {
        report: SecurityReport {
            params: params.clone(),
            threshold,
            threshold_mode: opts.threshold_mode,
            pool_breach,
            takeover,
            epoch_failure: attack.clone(),
            attack,
            expected_rounds,
            years,
            method: opts.method,
        },
        secure,
        secure_threshold_years: opts.secure_years.clone(),
    })
}

/// Display form of an [`AttackSummary`]: probabilities to three significant
/// digits, years to two decimals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedReport {
    pub scenario: RawScenario,
    #[serde(rename = "Lambda")]
    pub id_pool: u64,
    pub lambda: u64,
    pub committee_capacity: u64,
    pub unassigned_ids: u64,
    pub threshold: u64,
    pub threshold_mode: ThresholdMode,
    pub method: Method,
    #[serde(rename = "P")]
    pub pool_breach: String,
    #[serde(rename = "P_prime")]
    pub takeover: String,
    #[serde(rename = "P_double_prime")]
    pub attack: String,
    pub p_e: String,
    #[serde(rename = "E_s")]
    pub expected_rounds: String,
    #[serde(rename = "A")]
    pub years: String,
    #[serde(rename = "A_sci")]
    pub years_sci: String,
    pub secure: bool,
    pub secure_threshold_years: String,
}

impl AttackSummary {
    pub fn render(&self) -> RenderedReport {
        let r = &self.report;
        RenderedReport {
            scenario: r.params.to_raw(),
            id_pool: r.params.id_pool(),
            lambda: r.params.committees(),
            committee_capacity: r.params.committee_capacity(),
            unassigned_ids: r.params.unassigned_ids(),
            threshold: r.threshold,
            threshold_mode: r.threshold_mode,
            method: r.method,
            pool_breach: r.pool_breach.to_scientific(3),
            takeover: r.takeover.to_scientific(3),
            attack: r.attack.to_scientific(3),
            p_e: r.epoch_failure.to_scientific(3),
            expected_rounds: r.expected_rounds.display(),
            years: r.years.display(),
            years_sci: r.years.to_scientific(3),
            secure: self.secure,
            secure_threshold_years: Fraction::from_ratio(self.secure_threshold_years.clone())
                .to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{One, Zero};

    use crate::genpoly::pgfa_failure_prob;
    use crate::hypergeom::pool_breach_prob;

    fn row(n_nodes: u64, m: u64, m_sel: u64, n: u64, r_pool: (u64, u64), ns: u64) -> NetworkParams {
        NetworkParams::validate(&RawScenario {
            nodes: n_nodes,
            selection_pool: 800,
            sybil_ids: m,
            selected_sybils: m_sel,
            n,
            r: Fraction::new(333, 1000),
            pool_resiliency: Fraction::new(r_pool.0, r_pool.1),
            rounds_per_year: ns,
            label: None,
            lambda: None,
        })
        .unwrap()
    }

    #[test]
    fn table_row_one() {
        let p = row(1000, 200, 200, 100, (20, 100), 365);
        let th = ThresholdMode::default().threshold(&p);
        let attack = successful_attack_prob(&p, th);
        assert_eq!(attack.to_scientific(3), "3.18e-07");
        assert_eq!(attack, pool_breach_prob(&p, ThresholdMode::default()).mul(&pgfa_failure_prob(&p)));
        let years = years_to_fail(&attack, 365).to_f64();
        assert!((years - 8623.61).abs() / 8623.61 < 0.005, "{years}");
        assert_eq!(years_to_fail(&attack, 185).to_fixed2(), "17014.16");
    }

    #[test]
    fn years_edge_cases() {
        assert_eq!(years_to_fail(&ExactProb::zero(), 365), Expectation::Infinite);
        assert_eq!(
            years_to_fail(&ExactProb::one(), 4),
            Expectation::Finite(BigRatio::new(1u32.into(), 4u32.into()))
        );
        let half = ExactProb::from_ratio_u64(1, 2).unwrap();
        let third = ExactProb::from_ratio_u64(1, 3).unwrap();
        assert!(years_to_fail(&half, 10) < years_to_fail(&third, 10));
        assert!(years_to_fail(&half, 20) < years_to_fail(&half, 10));
        assert_eq!(expected_rounds(&half), Expectation::Finite(BigRatio::from_integer(2u32.into())));
    }

    #[test]
    fn no_sybils_no_attack() {
        let p = NetworkParams::validate(&RawScenario {
            nodes: 1000,
            selection_pool: 800,
            sybil_ids: 0,
            selected_sybils: 0,
            n: 100,
            r: Fraction::new(333, 1000),
            pool_resiliency: Fraction::new(1, 5),
            rounds_per_year: 365,
            label: None,
            lambda: None,
        })
        .unwrap();
        assert!(successful_attack_prob(&p, 161).is_zero());
        assert!(bcp_comparator(&p).is_zero());
        assert!(successful_attack_prob(&p, 0).is_zero());
    }

    #[test]
    fn both_factors_one() {
        // 3 committees of 10 at capacity 3 hold at most 9 < 12 Sybil IDs.
        let p = NetworkParams::validate(&RawScenario {
            nodes: 40,
            selection_pool: 30,
            sybil_ids: 12,
            selected_sybils: 12,
            n: 10,
            r: Fraction::new(1, 3),
            pool_resiliency: Fraction::new(1, 5),
            rounds_per_year: 365,
            label: None,
            lambda: None,
        })
        .unwrap();
        assert!(successful_attack_prob(&p, 0).is_one());
        assert_eq!(epoch_failure_jhda(&p, 0, 1_000).unwrap(), ExactProb::one());
    }

    #[test]
    fn bcp_single_committee_is_plain_tail() {
        let p = NetworkParams::validate(&RawScenario {
            nodes: 30,
            selection_pool: 20,
            sybil_ids: 8,
            selected_sybils: 8,
            n: 20,
            r: Fraction::new(1, 4),
            pool_resiliency: Fraction::new(1, 5),
            rounds_per_year: 1,
            label: None,
            lambda: None,
        })
        .unwrap();
        // One committee holding the whole pool: 8 Sybil IDs > 5 with certainty.
        assert!(bcp_comparator(&p).is_one());
        assert!(pgfa_failure_prob(&p).is_one());
    }

    #[test]
    fn secure_flag_follows_threshold() {
        let p = row(1000, 250, 125, 80, (20, 100), 185);
        let summary = analyze(&p, &AnalysisOptions::default()).unwrap();
        assert_eq!(summary.render().years, "69.97");
        assert!(!summary.secure);
        let lenient = AnalysisOptions {
            secure_years: BigRatio::from_integer(1u32.into()),
            ..AnalysisOptions::default()
        };
        assert!(analyze(&p, &lenient).unwrap().secure);
    }

    #[test]
    fn methods_agree_where_enumeration_is_affordable() {
        let p = NetworkParams::validate(&RawScenario {
            nodes: 40,
            selection_pool: 24,
            sybil_ids: 10,
            selected_sybils: 7,
            n: 6,
            r: Fraction::new(1, 3),
            pool_resiliency: Fraction::new(1, 4),
            rounds_per_year: 12,
            label: None,
            lambda: None,
        })
        .unwrap();
        let pgfa = analyze(&p, &AnalysisOptions::default()).unwrap();
        let jhda = analyze(
            &p,
            &AnalysisOptions {
                method: Method::JhdaExact,
                ..AnalysisOptions::default()
            },
        )
        .unwrap();
        assert_eq!(pgfa.report.attack, jhda.report.attack);
        assert_eq!(
            jhda.report.epoch_failure,
            epoch_failure_jhda(&p, pgfa.report.threshold, 1_000).unwrap()
        );
        assert!(analyze(
            &p,
            &AnalysisOptions {
                method: Method::Bcp,
                ..AnalysisOptions::default()
            }
        )
        .is_err());
    }

    #[test]
    fn refused_enumeration_propagates() {
        let p = row(1000, 200, 200, 100, (20, 100), 365);
        let err = epoch_failure_jhda(&p, 161, 1_000_000).unwrap_err();
        assert!(matches!(err, JhdaError::BudgetExceeded { .. }));
    }

    #[test]
    fn years_display_switches_to_scientific() {
        let r = |n: u64, d: u64| Expectation::Finite(BigRatio::new(n.into(), d.into()));
        assert_eq!(r(862361, 100).display(), "8623.61");
        assert_eq!(r(1, 100).display(), "1.00e-02");
        assert_eq!(r(999_999, 1).display(), "999999.00");
        assert_eq!(r(1_000_000, 1).display(), "1.00e+06");
        assert_eq!(Expectation::Infinite.display(), "inf");
    }
}
