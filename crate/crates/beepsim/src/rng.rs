//! Deterministic random streams.
//!
//! Every random draw in the simulator comes from a ChaCha8 stream whose key
//! is derived from a small tuple of integers (a domain tag plus caller
//! coordinates such as `(seed, vertex, slot)`). Two consequences matter:
//!
//! - Runs are reproducible bit-for-bit from the experiment seed alone, on
//!   any platform and at any parallelism level, because no stream depends
//!   on scheduling order.
//! - A vertex's stream is keyed by its *position* in the engine's vertex
//!   array, which the automaton itself never sees; randomness therefore
//!   cannot leak identity information into protocol logic.
//!
//! [`Draw`] adds the exact small-probability draws the protocols need:
//! fair bits, `Bernoulli(2^-e)` via `e` fresh bits, and unbiased uniform
//! integers via masked rejection. None of these go through floating point,
//! so `p = 2^-e` is exact at every scale.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha8 stream handed to automatons; one per `(seed, vertex, slot)`.
pub type SlotRng = ChaCha8Rng;

/// Domain tags keep unrelated consumers of the same seed statistically
/// independent (engine slots vs. graph generation vs. signature draws).
pub const DOMAIN_SLOT: u64 = 0x5107;
pub const DOMAIN_GNP: u64 = 0x6e70;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a fixed bijective mixer with full avalanche.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 256-bit ChaCha key from an ordered tuple of words.
fn derive_key(parts: &[u64]) -> [u8; 32] {
    let mut state = 0x243f_6a88_85a3_08d3u64; // fixed IV
    for &part in parts {
        state = mix64(state.wrapping_add(GOLDEN) ^ part);
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = mix64(state.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

/// Stream for one vertex in one slot of one run.
pub fn slot_stream(seed: u64, vertex: u64, slot: u64) -> SlotRng {
    ChaCha8Rng::from_seed(derive_key(&[DOMAIN_SLOT, seed, vertex, slot]))
}

/// Stream for random-graph sampling; `attempt` separates connectivity retries.
pub fn gnp_stream(seed: u64, attempt: u64) -> SlotRng {
    ChaCha8Rng::from_seed(derive_key(&[DOMAIN_GNP, seed, attempt, 0]))
}

/// Exact randomized draws used by the protocols.
pub trait Draw: RngCore {
    /// One fair bit.
    fn bit(&mut self) -> bool {
        self.next_u32() & 1 == 1
    }

    /// `true` with probability exactly `2^-exponent`; requires `exponent >= 1`.
    ///
    /// Implemented as "all of `exponent` fresh bits are zero", so the
    /// probability is exact for every exponent.
    fn bernoulli_pow2(&mut self, exponent: u32) -> bool {
        assert!(exponent >= 1, "probability exponent must be at least 1");
        let mut remaining = exponent;
        while remaining > 0 {
            let take = remaining.min(64);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            if self.next_u64() & mask != 0 {
                return false;
            }
            remaining -= take;
        }
        true
    }

    /// Unbiased uniform draw from `0..bound` (masked rejection; no floats).
    fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "uniform bound must be positive");
        let mask = if bound.is_power_of_two() {
            bound - 1
        } else {
            bound.next_power_of_two() - 1
        };
        loop {
            let x = self.next_u64() & mask;
            if x < bound {
                return x;
            }
        }
    }

    /// Uniform `f64` in `[0, 1)` with 53 random bits (graph sampling only).
    fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl<R: RngCore + ?Sized> Draw for R {}
