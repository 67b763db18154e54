//! Generating-function computation of the committee-takeover probability.
//!
//! One committee of size `n` that tolerates at most `c` Sybil IDs is encoded
//! as `ψ(x) = Σ_{i=0}^{c} C(n, i) x^i`: the coefficient of `x^i` counts the
//! ways to seat `i` Sybil IDs in that committee. Committees are disjoint, so
//! the safe placements of `m` Sybil IDs over `λ` committees are counted by
//! `[x^m] ψ(x)^λ`. Dividing by the unconstrained count `C(λn, m)` gives the
//! probability that no committee is taken over.

use std::fmt;

use num::bigint::BigUint;
use num::Zero;
use thiserror::Error;

use crate::exactmath::{choose, ExactProb};
use crate::params::{CommitteeLayout, NetworkParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("committee capacity {cap} exceeds committee size {n}")]
    CapacityExceedsSize { cap: u64, n: u64 },
}

/// Dense polynomial with non-negative big-integer coefficients.
///
/// Trailing zeros are trimmed; with a degree cap nothing above the cap is
/// ever stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BigPoly {
    coeffs: Vec<BigUint>,
    degree_cap: Option<usize>,
}

impl BigPoly {
    pub fn new(coeffs: Vec<BigUint>, degree_cap: Option<usize>) -> Self {
        let mut p = BigPoly { coeffs, degree_cap };
        p.normalize();
        p
    }

    pub fn from_u64s(coeffs: &[u64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigUint::from(c)).collect(), None)
    }

    pub fn one() -> Self {
        Self::from_u64s(&[1])
    }

    fn normalize(&mut self) {
        if let Some(cap) = self.degree_cap {
            self.coeffs.truncate(cap + 1);
        }
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn degree_cap(&self) -> Option<usize> {
        self.degree_cap
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Sum of all coefficients, i.e. the value at `x = 1`.
    pub fn coefficient_sum(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    pub fn truncated(&self, cap: usize) -> BigPoly {
        BigPoly::new(self.coeffs.clone(), Some(cap))
    }
}

impl fmt::Debug for BigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => c.to_string(),
                1 => format!("{c}x"),
                _ => format!("{c}x^{i}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

/// `ψ(x) = Σ_{i=0}^{cap} C(n, i) x^i`.
pub fn committee_poly(n: u64, cap: u64) -> Result<BigPoly, PolyError> {
    if cap > n {
        return Err(PolyError::CapacityExceedsSize { cap, n });
    }
    Ok(BigPoly::new((0..=cap).map(|i| choose(n, i)).collect(), None))
}

/// Product of `a` and `b`, dropping every term above `cap`.
pub fn poly_mul(a: &BigPoly, b: &BigPoly, cap: Option<usize>) -> BigPoly {
    if a.is_zero() || b.is_zero() {
        return BigPoly::new(Vec::new(), cap);
    }
    let full = a.coeffs.len() + b.coeffs.len() - 1;
    let len = cap.map_or(full, |c| full.min(c + 1));
    let mut out = vec![BigUint::zero(); len];
    for (i, x) in a.coeffs.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate().take(len - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    BigPoly::new(out, cap)
}

/// `p^exponent` truncated to degree `cap`, by square-and-multiply.
///
/// Truncation commutes with multiplication for the low-order terms, so
/// truncating after every step gives the same coefficients up to `cap` as
/// expanding fully.
pub fn poly_pow(p: &BigPoly, exponent: u64, cap: usize) -> BigPoly {
    let mut result = BigPoly::new(vec![BigUint::from(1u32)], Some(cap));
    let mut base = p.truncated(cap);
    let mut e = exponent;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul(&result, &base, Some(cap));
        }
        e >>= 1;
        if e > 0 {
            base = poly_mul(&base, &base, Some(cap));
        }
    }
    result
}

/// `[x^m] p`.
pub fn coefficient(p: &BigPoly, m: usize) -> BigUint {
    p.coeffs.get(m).cloned().unwrap_or_default()
}

/// Number of ways to place `layout.sybils` Sybil IDs into the committee
/// slots so that no committee exceeds its capacity: `[x^M'] ψ(x)^λ`.
pub fn safe_count(layout: &CommitteeLayout) -> BigUint {
    let m = layout.sybils as usize;
    if layout.sybils > layout.committees * layout.capacity {
        return BigUint::zero();
    }
    let psi = committee_poly(layout.size, layout.capacity.min(layout.size))
        .expect("capacity clamped to size");
    coefficient(&poly_pow(&psi, layout.committees, m), m)
}

/// Where the selected Sybil IDs may land.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SlotModel {
    /// Only the `λ·n` committee slots; leftover pool IDs are ignored.
    #[default]
    CommitteeSlots,
    /// All `K` selection-pool slots; Sybil IDs in the `K - λ·n` leftover
    /// slots are harmless.
    SelectionPool,
}

/// `P' = 1 - [x^M'] ψ(x)^λ / C(λn, M')`.
///
/// When `M'` exceeds the number of committee slots there is no way to seat
/// the Sybil IDs at all and the result is 1.
pub fn takeover_prob(layout: &CommitteeLayout) -> ExactProb {
    let total = choose(layout.slots(), layout.sybils);
    if total.is_zero() {
        return ExactProb::one();
    }
    ExactProb::from_ratio(safe_count(layout), total)
        .expect("safe placements are a subset of all placements")
        .complement()
}

/// `P'` when Sybil IDs may also fall into `unassigned` leftover slots.
pub fn takeover_prob_with_leftover(layout: &CommitteeLayout, unassigned: u64) -> ExactProb {
    if unassigned == 0 {
        return takeover_prob(layout);
    }
    let m = layout.sybils;
    let total = choose(layout.slots() + unassigned, m);
    if total.is_zero() {
        return ExactProb::one();
    }
    let psi = committee_poly(layout.size, layout.capacity.min(layout.size))
        .expect("capacity clamped to size");
    let safe_poly = poly_pow(&psi, layout.committees, m as usize);
    let safe: BigUint = safe_poly
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| c * choose(unassigned, m - j as u64))
        .sum();
    ExactProb::from_ratio(safe, total)
        .expect("safe placements are a subset of all placements")
        .complement()
}

/// `P'` for validated parameters, using the committee-slot model.
pub fn pgfa_failure_prob(params: &NetworkParams) -> ExactProb {
    takeover_prob(&params.layout())
}

pub fn pgfa_failure_prob_with(params: &NetworkParams, model: SlotModel) -> ExactProb {
    match model {
        SlotModel::CommitteeSlots => takeover_prob(&params.layout()),
        SlotModel::SelectionPool => {
            takeover_prob_with_leftover(&params.layout(), params.unassigned_ids())
        }
    }
}

/// Negative control for the oracle grid: divides by `C(λn + 1, M')`, the
/// kind of population mix-up that breaks agreement with enumeration.
#[doc(hidden)]
pub fn takeover_prob_faulty_denominator(layout: &CommitteeLayout) -> ExactProb {
    let total = choose(layout.slots() + 1, layout.sybils);
    if total.is_zero() {
        return ExactProb::one();
    }
    ExactProb::from_ratio(safe_count(layout), total)
        .expect("safe count below the inflated total")
        .complement()
}
