//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by
//! `(seed, node, iteration, domain)`. The draw made by node `i` at iteration
//! `t` therefore never depends on evaluation order or worker count, which is
//! what makes traces reproducible and lets centralized and decentralized runs
//! share noise realizations.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DOMAIN_GRAPH: u64 = 0x4752_4148;
const DOMAIN_PROBLEM: u64 = 0x5052_4f42;
const DOMAIN_DRAW: u64 = 0x4452_4157;
const DOMAIN_MISC: u64 = 0x4d49_5343;

fn keyed(seed: u64, a: u64, b: u64, domain: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..32].copy_from_slice(&domain.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream for topology generation.
pub fn graph_stream(seed: u64) -> ChaCha8Rng {
    keyed(seed, 0, 0, DOMAIN_GRAPH)
}

/// Stream for problem-instance generation.
pub fn problem_stream(seed: u64) -> ChaCha8Rng {
    keyed(seed, 0, 0, DOMAIN_PROBLEM)
}

/// Stream for the stochastic-gradient draw of `node` at iteration `iter`.
pub fn draw_stream(seed: u64, node: usize, iter: usize) -> ChaCha8Rng {
    keyed(seed, node as u64, iter as u64, DOMAIN_DRAW)
}

/// Auxiliary stream for anything else that needs seeded randomness.
pub fn misc_stream(seed: u64, tag: u64) -> ChaCha8Rng {
    keyed(seed, tag, 0, DOMAIN_MISC)
}
