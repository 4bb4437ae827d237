//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`SeededRng`], a ChaCha8
//! stream keyed from a 64-bit seed. The key is four consecutive SplitMix64
//! outputs starting from the seed, written little-endian into the 32-byte
//! ChaCha key. Uniform reals are `(next_u64 >> 11) * 2^-53`, so the stream is
//! bit-identical on every platform and easy to reproduce in other languages.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output for the state `x` (the state is advanced by the
/// golden-ratio increment before mixing).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` under `base`:
/// `splitmix64(base ^ splitmix64(stream))`.
///
/// Realization `r` of a sweep uses `derive_seed(master_seed, r)`, and the
/// realization in turn derives stream 0 (couplings), 1 (initial state) and
/// 2 (random fragments).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            let word = splitmix64(state);
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform index in 0..len, `floor(u * len)`.
    pub fn index(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        ((self.uniform01() * len as f64) as usize).min(len - 1)
    }
}
