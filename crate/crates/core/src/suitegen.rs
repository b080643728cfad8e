//! Test-suite variants with weaker oracles, built by disabling assertions.
//!
//! For a given seed the assertion ids (ascending) are shuffled once with a
//! SplitMix64-driven Fisher–Yates shuffle; a variant with keep rate `r`
//! keeps the first `round_half_up(r * n)` of that order. Variants that share
//! a seed are therefore nested. The exact PRNG is documented in
//! `docs/prng.md`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::lang::{AssertionId, Program};

pub const DEFAULT_KEEP_RATES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_SEEDS: [u64; 4] = [1, 2, 3, 4];

/// SplitMix64 (Steele, Lea & Flood).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Fisher–Yates from the back: for i = n-1 down to 1, swap i with
/// `next_u64() % (i + 1)`.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = SplitMix64::new(seed);
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuiteGenError {
    #[error("keep rate list is empty")]
    NoKeepRates,
    #[error("seed list is empty")]
    NoSeeds,
    #[error("keep rate {0} is outside [0, 1]")]
    BadKeepRate(f64),
    #[error("program has no assertions")]
    NoAssertions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteVariant {
    pub keep_rate: f64,
    pub seed: u64,
    pub disabled: BTreeSet<AssertionId>,
    pub program: Program,
}

impl SuiteVariant {
    pub fn n_enabled(&self) -> usize {
        self.program.assertions().iter().filter(|a| a.enabled).count()
    }
}

/// `round(rate * n)` with halves rounded up.
pub fn kept_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64) + 0.5).floor() as usize
}

/// The shuffled assertion order for `seed`.
pub fn assertion_order(p: &Program, seed: u64) -> Vec<AssertionId> {
    let mut ids: Vec<AssertionId> = p.assertions().iter().map(|a| a.id).collect();
    ids.sort();
    shuffle(&mut ids, seed);
    ids
}

/// One variant per (keep rate, seed) pair, rates varying fastest within
/// each seed.
pub fn generate_variants(
    p: &Program,
    keep_rates: &[f64],
    seeds: &[u64],
) -> Result<Vec<SuiteVariant>, SuiteGenError> {
    if keep_rates.is_empty() {
        return Err(SuiteGenError::NoKeepRates);
    }
    if seeds.is_empty() {
        return Err(SuiteGenError::NoSeeds);
    }
    if let Some(&r) = keep_rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(SuiteGenError::BadKeepRate(r));
    }
    let n = p.assertions().len();
    if n == 0 {
        return Err(SuiteGenError::NoAssertions);
    }
    let mut out = Vec::with_capacity(keep_rates.len() * seeds.len());
    for &seed in seeds {
        let order = assertion_order(p, seed);
        for &rate in keep_rates {
            let k = kept_count(rate, n);
            let kept: BTreeSet<AssertionId> = order[..k].iter().copied().collect();
            let disabled = order[k..].iter().copied().collect();
            let mut program = p.clone();
            program.set_enabled(|id| kept.contains(&id));
            out.push(SuiteVariant {
                keep_rate: rate,
                seed,
                disabled,
                program,
            });
        }
    }
    Ok(out)
}
