//! Exact security analysis of sharding-based blockchain protocols under
//! Sybil attacks.
//!
//! The pipeline has two stages. The adversary's Sybil IDs compete with
//! honest IDs for a place in the ID Selection Pool ([`hypergeom`]), and the
//! selected IDs are then spread uniformly over `λ` committees of size `n`
//! ([`genpoly`], cross-checked by [`jhda`] and [`simulate`]). [`attack`]
//! combines both into the successful-attack probability and years-to-fail.

pub mod attack;
pub mod cli;
pub mod exactmath;
pub mod genpoly;
pub mod hypergeom;
pub mod jhda;
pub mod params;
pub mod simulate;

pub use exactmath::{binomial, BigRatio, ExactProb};
pub use params::{CommitteeLayout, Fraction, NetworkParams, ParamError, RawScenario};
