#![allow(dead_code)]

use std::path::PathBuf;

use shardsec::{Fraction, NetworkParams, RawScenario};

#[allow(clippy::too_many_arguments)]
pub fn raw(
    nodes: u64,
    pool: u64,
    m: u64,
    m_sel: u64,
    n: u64,
    r: &str,
    big_r: &str,
    rounds: u64,
) -> RawScenario {
    RawScenario {
        nodes,
        selection_pool: pool,
        sybil_ids: m,
        selected_sybils: m_sel,
        n,
        r: r.parse::<Fraction>().unwrap(),
        pool_resiliency: big_r.parse::<Fraction>().unwrap(),
        rounds_per_year: rounds,
        label: None,
        lambda: None,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn params(
    nodes: u64,
    pool: u64,
    m: u64,
    m_sel: u64,
    n: u64,
    r: &str,
    big_r: &str,
    rounds: u64,
) -> NetworkParams {
    NetworkParams::validate(&raw(nodes, pool, m, m_sel, n, r, big_r, rounds)).unwrap()
}

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}
