//! Deterministic pseudo-random numbers shared by every seeded component.
//!
//! The generator is SplitMix64: the state advances by the golden-ratio
//! increment `0x9E3779B97F4A7C15` and each output is the state passed through
//! the SplitMix64 finaliser. Derived quantities are defined as follows so
//! that any implementation reproduces the same streams:
//!
//! - `next_f64`: the top 53 bits of an output scaled by 2^-53, in `[0, 1)`.
//! - `below(n)`: `(output * n) >> 64` computed in 128-bit arithmetic.
//! - `uniform(lo, hi)`: `lo + (hi - lo) * next_f64()`.
//! - `normal()`: Box–Muller with `u1 = 1 - next_f64()` (so `u1 ∈ (0, 1]`)
//!   and `u2 = next_f64()`, returning `sqrt(-2 ln u1) * cos(2π u2)`. The sine
//!   branch is discarded, so every normal consumes exactly two outputs.
//!
//! Sub-streams keyed by strings (for example one per class label) are seeded
//! with [`derive_seed`], an FNV-1a 64-bit hash over the little-endian seed
//! bytes followed by the key bytes.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher–Yates shuffle of the whole slice.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over `seed` (little-endian) followed by `key`.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    const OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    seed.to_le_bytes()
        .iter()
        .chain(key.as_bytes())
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}
