//! SplitMix64, implemented by hand so that every stochastic choice in the lab
//! is reproducible bit-for-bit from a 64-bit seed in any language.
//!
//! Derived quantities use fixed recipes:
//!
//! * `next_f64`: the top 53 bits of the next output scaled by 2^-53, so the
//!   result lies in `[0, 1)`.
//! * `below(n)`: the high 64 bits of `next_u64() * n` as a 128-bit product.
//!   One output is consumed per call, even for `n == 1`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform real in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle, walking from the last index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// The SplitMix64 output finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a purpose tag.
///
/// Used wherever one user-facing seed must feed several streams (trace
/// generation, perturbation, policy randomness) without them sharing draws.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix(seed ^ mix(tag.wrapping_add(GOLDEN_GAMMA)))
}

/// Stream tags passed to [`derive_seed`].
pub mod tags {
    pub const PERTURB: u64 = 1;
    pub const POLICY: u64 = 2;
    pub const COUPLING: u64 = 3;
    pub const RECALL: u64 = 4;
}
