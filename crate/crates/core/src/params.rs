//! Protocol parameter vector and its validation.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigUint;
use num::{One, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::exactmath::{to_fixed, BigRatio};

/// Violations of the parameter invariants. Each message names the invariant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("N must be at least 1 (N={0})")]
    NoNodes(u64),
    #[error("n must be at least 1 (n={0})")]
    EmptyCommittee(u64),
    #[error("N_s must be at least 1 (N_s={0})")]
    NoRounds(u64),
    #[error("{name} must lie strictly between 0 and 1 ({name}={value})")]
    ResiliencyOutOfRange { name: &'static str, value: String },
    #[error("M_sel exceeds M (M_sel={m_sel}, M={m})")]
    SelectedExceedsSybils { m_sel: u64, m: u64 },
    #[error("K exceeds Lambda (K={k}, Lambda={lambda_pool} = N - 1 + M)")]
    PoolExceedsIds { k: u64, lambda_pool: u64 },
    #[error("M_sel exceeds K (M_sel={m_sel}, K={k})")]
    SelectedExceedsPool { m_sel: u64, k: u64 },
    #[error("K smaller than n leaves no committee (K={k}, n={n})")]
    NoCommittees { k: u64, n: u64 },
    #[error("lambda disagrees with floor(K/n) (lambda={given}, floor(K/n)={derived})")]
    LambdaMismatch { given: u64, derived: u64 },
    #[error("invalid fraction {0:?}")]
    BadFraction(String),
}

/// An exact fraction read from `"0.333"`, `"1/3"` or a JSON number.
///
/// Decimal text is taken literally: `0.333` is `333/1000`, never `1/3`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(BigRatio);

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        Fraction(BigRatio::new(BigUint::from(num), BigUint::from(den)))
    }

    pub fn from_ratio(r: BigRatio) -> Self {
        Fraction(r)
    }

    pub fn as_ratio(&self) -> &BigRatio {
        &self.0
    }

    /// `floor(self * count)`.
    pub fn floor_times(&self, count: u64) -> u64 {
        let prod = &self.0 * BigRatio::from_integer(BigUint::from(count));
        prod.to_integer().to_u64().expect("floor fits in u64")
    }

    /// `ceil(self * count)`.
    pub fn ceil_times(&self, count: u64) -> u64 {
        let prod = &self.0 * BigRatio::from_integer(BigUint::from(count));
        prod.ceil().to_integer().to_u64().expect("ceil fits in u64")
    }

    fn strictly_inside_unit(&self) -> bool {
        !self.0.is_zero() && self.0 < BigRatio::one()
    }
}

impl FromStr for Fraction {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParamError::BadFraction(s.to_string());
        let t = s.trim();
        if let Some((num, den)) = t.split_once('/') {
            let num: BigUint = num.trim().parse().map_err(|_| bad())?;
            let den: BigUint = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Fraction(BigRatio::new(num, den)));
        }
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigUint = format!("{int}{frac}")
            .trim_start_matches('0')
            .parse()
            .unwrap_or_else(|_| BigUint::zero());
        let den = num::pow(BigUint::from(10u32), frac.len());
        Ok(Fraction(BigRatio::new(digits, den)))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Terminating decimals print as decimals, everything else as n/d.
        // 2^a 5^b needs max(a, b) places.
        let mut den = self.0.denom().clone();
        let mut places = [0usize; 2];
        for (slot, p) in places.iter_mut().zip([2u32, 5]) {
            while (&den % p).is_zero() {
                den /= p;
                *slot += 1;
            }
        }
        if den.is_one() {
            write!(f, "{}", to_fixed(&self.0, places[0].max(places[1])))
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fraction({self})")
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct FractionVisitor;

        impl Visitor<'_> for FractionVisitor {
            type Value = Fraction;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or a \"p/q\" string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Fraction, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Fraction, E> {
                Ok(Fraction::new(v, 1))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Fraction, E> {
                u64::try_from(v)
                    .map(|v| Fraction::new(v, 1))
                    .map_err(|_| E::custom("negative fraction"))
            }

            // The shortest round-trip rendering recovers the literal as written.
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Fraction, E> {
                if !v.is_finite() || v < 0.0 {
                    return Err(E::custom("fraction must be a finite non-negative number"));
                }
                format!("{v}").parse().map_err(E::custom)
            }
        }

        d.deserialize_any(FractionVisitor)
    }
}

/// Unvalidated scenario record, as read from JSON or CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    #[serde(rename = "N")]
    pub nodes: u64,
    #[serde(rename = "K")]
    pub selection_pool: u64,
    #[serde(rename = "M")]
    pub sybil_ids: u64,
    #[serde(rename = "M_sel")]
    pub selected_sybils: u64,
    pub n: u64,
    pub r: Fraction,
    #[serde(rename = "R")]
    pub pool_resiliency: Fraction,
    #[serde(rename = "N_s")]
    pub rounds_per_year: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Optional cross-check; the committee count is always derived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u64>,
}

/// Validated protocol parameters with derived `Λ` and `λ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkParams {
    nodes: u64,
    selection_pool: u64,
    sybil_ids: u64,
    selected_sybils: u64,
    committee_size: u64,
    committee_resiliency: Fraction,
    pool_resiliency: Fraction,
    rounds_per_year: u64,
    label: Option<String>,
    id_pool: u64,
    committees: u64,
}

/// The slot-level view used by every committee-takeover computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CommitteeLayout {
    /// Number of committees (`λ`).
    pub committees: u64,
    /// Committee size (`n`).
    pub size: u64,
    /// Largest tolerated Sybil count per committee; more than this fails.
    pub capacity: u64,
    /// Sybil IDs to distribute (`M_sel`).
    pub sybils: u64,
}

impl CommitteeLayout {
    pub fn new(committees: u64, size: u64, capacity: u64, sybils: u64) -> Self {
        CommitteeLayout {
            committees,
            size,
            capacity,
            sybils,
        }
    }

    pub fn slots(&self) -> u64 {
        self.committees * self.size
    }

    pub fn with_sybils(self, sybils: u64) -> Self {
        CommitteeLayout { sybils, ..self }
    }
}

impl NetworkParams {
    /// Checks every invariant and derives `Λ = N - 1 + M` and `λ = ⌊K/n⌋`.
    pub fn validate(raw: &RawScenario) -> Result<NetworkParams, ParamError> {
        if raw.nodes == 0 {
            return Err(ParamError::NoNodes(raw.nodes));
        }
        if raw.n == 0 {
            return Err(ParamError::EmptyCommittee(raw.n));
        }
        if raw.rounds_per_year == 0 {
            return Err(ParamError::NoRounds(raw.rounds_per_year));
        }
        for (name, value) in [("r", &raw.r), ("R", &raw.pool_resiliency)] {
            if !value.strictly_inside_unit() {
                return Err(ParamError::ResiliencyOutOfRange {
                    name,
                    value: value.to_string(),
                });
            }
        }
        if raw.selected_sybils > raw.sybil_ids {
            return Err(ParamError::SelectedExceedsSybils {
                m_sel: raw.selected_sybils,
                m: raw.sybil_ids,
            });
        }
        let id_pool = raw.nodes - 1 + raw.sybil_ids;
        if raw.selection_pool > id_pool {
            return Err(ParamError::PoolExceedsIds {
                k: raw.selection_pool,
                lambda_pool: id_pool,
            });
        }
        if raw.selected_sybils > raw.selection_pool {
            return Err(ParamError::SelectedExceedsPool {
                m_sel: raw.selected_sybils,
                k: raw.selection_pool,
            });
        }
        let committees = raw.selection_pool / raw.n;
        if committees == 0 {
            return Err(ParamError::NoCommittees {
                k: raw.selection_pool,
                n: raw.n,
            });
        }
        if let Some(given) = raw.lambda {
            if given != committees {
                return Err(ParamError::LambdaMismatch {
                    given,
                    derived: committees,
                });
            }
        }
        Ok(NetworkParams {
            nodes: raw.nodes,
            selection_pool: raw.selection_pool,
            sybil_ids: raw.sybil_ids,
            selected_sybils: raw.selected_sybils,
            committee_size: raw.n,
            committee_resiliency: raw.r.clone(),
            pool_resiliency: raw.pool_resiliency.clone(),
            rounds_per_year: raw.rounds_per_year,
            label: raw.label.clone(),
            id_pool,
            committees,
        })
    }

    /// Back to the flat record form; `validate(p.to_raw()) == p`.
    pub fn to_raw(&self) -> RawScenario {
        RawScenario {
            nodes: self.nodes,
            selection_pool: self.selection_pool,
            sybil_ids: self.sybil_ids,
            selected_sybils: self.selected_sybils,
            n: self.committee_size,
            r: self.committee_resiliency.clone(),
            pool_resiliency: self.pool_resiliency.clone(),
            rounds_per_year: self.rounds_per_year,
            label: self.label.clone(),
            lambda: None,
        }
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn selection_pool(&self) -> u64 {
        self.selection_pool
    }

    pub fn sybil_ids(&self) -> u64 {
        self.sybil_ids
    }

    pub fn selected_sybils(&self) -> u64 {
        self.selected_sybils
    }

    pub fn committee_size(&self) -> u64 {
        self.committee_size
    }

    pub fn committee_resiliency(&self) -> &Fraction {
        &self.committee_resiliency
    }

    pub fn pool_resiliency(&self) -> &Fraction {
        &self.pool_resiliency
    }

    pub fn rounds_per_year(&self) -> u64 {
        self.rounds_per_year
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// `Λ = N - 1 + M`.
    pub fn id_pool(&self) -> u64 {
        self.id_pool
    }

    /// `λ = ⌊K/n⌋`.
    pub fn committees(&self) -> u64 {
        self.committees
    }

    /// `⌊n·r⌋`; a committee holding more Sybil IDs than this fails.
    pub fn committee_capacity(&self) -> u64 {
        self.committee_resiliency.floor_times(self.committee_size)
    }

    /// Selection-pool IDs left over after filling `λ` committees.
    pub fn unassigned_ids(&self) -> u64 {
        self.selection_pool - self.committees * self.committee_size
    }

    pub fn layout(&self) -> CommitteeLayout {
        CommitteeLayout {
            committees: self.committees,
            size: self.committee_size,
            capacity: self.committee_capacity(),
            sybils: self.selected_sybils,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row1() -> RawScenario {
        RawScenario {
            nodes: 1000,
            selection_pool: 800,
            sybil_ids: 200,
            selected_sybils: 200,
            n: 100,
            r: "0.333".parse().unwrap(),
            pool_resiliency: "0.20".parse().unwrap(),
            rounds_per_year: 365,
            label: None,
            lambda: None,
        }
    }

    #[test]
    fn table_row_one_validates() {
        let p = NetworkParams::validate(&row1()).unwrap();
        assert_eq!(p.committees(), 8);
        assert_eq!(p.id_pool(), 1199);
        assert_eq!(p.committee_capacity(), 33);
        assert_eq!(p.unassigned_ids(), 0);
    }

    #[test]
    fn larger_committees() {
        let raw = RawScenario {
            nodes: 1400,
            n: 200,
            ..row1()
        };
        let p = NetworkParams::validate(&raw).unwrap();
        assert_eq!(p.committees(), 4);
        assert_eq!(p.committee_capacity(), 66);
    }

    #[test]
    fn rejects_each_invariant_by_name() {
        let err = |raw: RawScenario| NetworkParams::validate(&raw).unwrap_err().to_string();
        assert!(err(RawScenario {
            selected_sybils: 300,
            ..row1()
        })
        .contains("M_sel exceeds M"));
        assert!(err(RawScenario {
            selection_pool: 1500,
            ..row1()
        })
        .contains("K exceeds Lambda"));
        assert!(err(RawScenario {
            selection_pool: 150,
            ..row1()
        })
        .contains("M_sel exceeds K"));
        assert!(err(RawScenario {
            selected_sybils: 50,
            selection_pool: 60,
            ..row1()
        })
        .contains("no committee"));
        assert!(err(RawScenario { n: 0, ..row1() }).contains("n must be at least 1"));
        assert!(err(RawScenario {
            rounds_per_year: 0,
            ..row1()
        })
        .contains("N_s"));
        assert!(err(RawScenario {
            r: "1".parse().unwrap(),
            ..row1()
        })
        .contains("r must lie"));
        assert!(err(RawScenario {
            pool_resiliency: "0".parse().unwrap(),
            ..row1()
        })
        .contains("R must lie"));
        assert!(err(RawScenario {
            n: 200,
            lambda: Some(8),
            ..row1()
        })
        .contains("lambda disagrees"));
    }

    #[test]
    fn remainder_ids_are_reported() {
        let p = NetworkParams::validate(&RawScenario { n: 300, ..row1() }).unwrap();
        assert_eq!(p.committees(), 2);
        assert_eq!(p.unassigned_ids(), 200);
    }

    #[test]
    fn decimal_literal_is_exact() {
        let r: Fraction = "0.333".parse().unwrap();
        assert_eq!(r, Fraction::new(333, 1000));
        assert_eq!(r.floor_times(100), 33);
        // Decimal literal and 1/3 disagree at n = 3000.
        assert_eq!(r.floor_times(3000), 999);
        let third: Fraction = "1/3".parse().unwrap();
        assert_eq!(third.floor_times(3000), 1000);
        assert_eq!(third.ceil_times(10), 4);
        assert!("abc".parse::<Fraction>().is_err());
        assert!("1/0".parse::<Fraction>().is_err());
        assert!(".".parse::<Fraction>().is_err());
        assert_eq!(".5".parse::<Fraction>().unwrap(), Fraction::new(1, 2));
    }

    #[test]
    fn fraction_display() {
        assert_eq!(Fraction::new(333, 1000).to_string(), "0.333");
        assert_eq!(Fraction::new(1, 5).to_string(), "0.2");
        assert_eq!(Fraction::new(1, 3).to_string(), "1/3");
        assert_eq!(Fraction::new(1, 8).to_string(), "0.125");
    }

    #[test]
    fn json_numbers_keep_their_literal() {
        let raw: RawScenario = serde_json::from_str(
            r#"{"N":1000,"K":800,"M":200,"M_sel":200,"n":100,"r":0.333,"R":"1/5","N_s":365}"#,
        )
        .unwrap();
        assert_eq!(raw.r, Fraction::new(333, 1000));
        assert_eq!(raw.pool_resiliency, Fraction::new(1, 5));
    }

    #[test]
    fn validate_is_idempotent() {
        let p = NetworkParams::validate(&row1()).unwrap();
        let again = NetworkParams::validate(&p.to_raw()).unwrap();
        assert_eq!(p, again);
    }
}
