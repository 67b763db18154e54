//! Exact numeric substrate: memoized binomial coefficients and probabilities
//! stored as reduced big-integer fractions.
//!
//! Nothing in this crate converts to floating point before the presentation
//! boundary. Values such as `1 - 9.25e-13` lose every significant digit in
//! `f64`, so all composition happens on [`ExactProb`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num::bigint::BigUint;
use num::rational::Ratio;
use num::{Integer, One, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision non-negative rational.
pub type BigRatio = Ratio<BigUint>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbError {
    #[error("probability denominator is zero")]
    ZeroDenominator,
    #[error("probability exceeds one: {num}/{den}")]
    ExceedsOne { num: BigUint, den: BigUint },
}

type MemoTable = RwLock<HashMap<(u64, u64), BigUint>>;

fn memo() -> &'static MemoTable {
    static MEMO: OnceLock<MemoTable> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Binomial coefficient `C(n, k)`; zero when `k < 0` or `k > n`.
///
/// Results are memoized under the canonical key `(n, min(k, n - k))`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = k as u64;
    let k = k.min(n - k);
    if k == 0 {
        return BigUint::one();
    }
    if k == 1 {
        return BigUint::from(n);
    }
    if let Some(v) = memo().read().expect("binomial memo poisoned").get(&(n, k)) {
        return v.clone();
    }
    let value = binomial_uncached(n, k);
    memo()
        .write()
        .expect("binomial memo poisoned")
        .entry((n, k))
        .or_insert_with(|| value.clone());
    value
}

/// Shorthand for the common unsigned call site.
pub fn choose(n: u64, k: u64) -> BigUint {
    if k > n {
        BigUint::zero()
    } else {
        binomial(n, k as i64)
    }
}

// Multiplicative form: after step i the accumulator equals C(n - k + i, i),
// so every division is exact. Dividing by gcd(i, acc) first keeps the
// intermediate product no larger than the final value times i.
fn binomial_uncached(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 1..=k {
        let factor = BigUint::from(n - k + i);
        let divisor = BigUint::from(i);
        let g = acc.gcd(&divisor);
        let reduced = &divisor / &g;
        acc = (acc / &g) * (factor / reduced);
    }
    acc
}

/// Exact probability in `[0, 1]`, always held in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProb(BigRatio);

impl ExactProb {
    pub fn zero() -> Self {
        ExactProb(BigRatio::zero())
    }

    pub fn one() -> Self {
        ExactProb(BigRatio::one())
    }

    /// Builds `num / den`, rejecting anything outside `[0, 1]`.
    ///
    /// Every probability here is a count of favourable configurations over
    /// a count of all configurations, so a rejection points at a formula bug.
    pub fn from_ratio(num: BigUint, den: BigUint) -> Result<Self, ProbError> {
        if den.is_zero() {
            return Err(ProbError::ZeroDenominator);
        }
        if num > den {
            return Err(ProbError::ExceedsOne { num, den });
        }
        Ok(ExactProb(BigRatio::new(num, den)))
    }

    pub fn from_ratio_u64(num: u64, den: u64) -> Result<Self, ProbError> {
        Self::from_ratio(BigUint::from(num), BigUint::from(den))
    }

    pub fn as_ratio(&self) -> &BigRatio {
        &self.0
    }

    pub fn into_ratio(self) -> BigRatio {
        self.0
    }

    pub fn numer(&self) -> &BigUint {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigUint {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `1 - p`.
    pub fn complement(&self) -> Self {
        ExactProb(BigRatio::one() - &self.0)
    }

    pub fn mul(&self, other: &ExactProb) -> ExactProb {
        ExactProb(&self.0 * &other.0)
    }

    /// Lossy conversion for statistics and plotting.
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }

    pub fn to_scientific(&self, sig_digits: usize) -> String {
        to_scientific(&self.0, sig_digits)
    }
}

impl fmt::Debug for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactProb({} ≈ {})", self.0, self.to_scientific(6))
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Converts a big rational to the nearest representable `f64` scale.
///
/// Handles values whose numerator and denominator both overflow `f64`.
pub fn ratio_to_f64(r: &BigRatio) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Shift so the quotient carries ~64 significant bits.
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (r.numer() << shift as usize) / r.denom()
    } else {
        r.numer() / (r.denom() << (-shift) as usize)
    };
    let q = q.to_f64().unwrap_or(f64::INFINITY);
    q * 2f64.powi(-shift as i32)
}

fn pow10(e: u32) -> BigUint {
    num::pow(BigUint::from(10u32), e as usize)
}

/// Floor of `log10(r)` for `r > 0`.
fn floor_log10(r: &BigRatio) -> i64 {
    // Estimate from bit lengths, then correct by at most a couple of steps.
    let est = ((r.numer().bits() as f64 - r.denom().bits() as f64) * std::f64::consts::LOG10_2)
        .floor() as i64;
    let mut e = est;
    loop {
        let lower = scale_pow10(e);
        if r < &lower {
            e -= 1;
            continue;
        }
        let upper = scale_pow10(e + 1);
        if r >= &upper {
            e += 1;
            continue;
        }
        return e;
    }
}

fn scale_pow10(e: i64) -> BigRatio {
    if e >= 0 {
        BigRatio::from_integer(pow10(e as u32))
    } else {
        BigRatio::new(BigUint::one(), pow10((-e) as u32))
    }
}

/// Rounds to the nearest integer, ties to even.
pub fn round_half_even(r: &BigRatio) -> BigUint {
    let (q, rem) = r.numer().div_rem(r.denom());
    let twice = rem << 1usize;
    match twice.cmp(r.denom()) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1u32,
        std::cmp::Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1u32
            }
        }
    }
}

/// Scientific notation with `sig_digits` significant digits, e.g. `2.04e-06`.
///
/// Zero renders as `"0"`. Rounding is half-to-even on the exact value.
pub fn to_scientific(r: &BigRatio, sig_digits: usize) -> String {
    assert!(sig_digits >= 1, "sig_digits must be at least 1");
    if r.numer().is_zero() {
        return "0".to_string();
    }
    let mut exp = floor_log10(r);
    let shift = sig_digits as i64 - 1 - exp;
    let mut digits = round_half_even(&(r * scale_pow10(shift)));
    if digits == pow10(sig_digits as u32) {
        digits = pow10(sig_digits as u32 - 1);
        exp += 1;
    }
    let s = digits.to_str_radix(10);
    let mut out = String::with_capacity(sig_digits + 6);
    out.push_str(&s[..1]);
    if sig_digits > 1 {
        out.push('.');
        out.push_str(&s[1..]);
    }
    out.push('e');
    out.push(if exp < 0 { '-' } else { '+' });
    out.push_str(&format!("{:02}", exp.abs()));
    out
}

/// Fixed-point rendering with `decimals` places, half-to-even.
pub fn to_fixed(r: &BigRatio, decimals: usize) -> String {
    let scaled = round_half_even(&(r * BigRatio::from_integer(pow10(decimals as u32))));
    let s = scaled.to_str_radix(10);
    if decimals == 0 {
        return s;
    }
    let s = format!("{:0>width$}", s, width = decimals + 1);
    let (int, frac) = s.split_at(s.len() - decimals);
    format!("{int}.{frac}")
}
