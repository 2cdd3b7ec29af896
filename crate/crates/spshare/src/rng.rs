//! Counter-style deterministic random numbers.
//!
//! Every matrix entry gets its own generator derived from `(seed, row, col)`,
//! so sampling is reproducible regardless of traversal order and safe to
//! split across threads.

/// 64-bit finalizer used by splitmix64. Bijective, so distinct inputs give
/// distinct outputs.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    z
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Small splitmix64 stream seeded from a key or an `(seed, row, col)` triple.
#[derive(Debug, Clone)]
pub struct EntryRng {
    state: u64,
}

impl EntryRng {
    pub fn from_seed(seed: u64) -> Self {
        EntryRng { state: mix64(seed) }
    }

    /// Generator for one matrix entry. For a fixed seed the derivation is
    /// injective in `(row, col)`.
    pub fn for_entry(seed: u64, row: u64, col: u64) -> Self {
        EntryRng {
            state: mix64(mix64(mix64(seed) ^ row) ^ col),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform draw from `[0, n)` by rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        if n.is_power_of_two() {
            return self.next_u64() & (n - 1);
        }
        let accept = ((1u128 << 64) / n as u128) * n as u128;
        loop {
            let x = self.next_u64();
            if (x as u128) < accept {
                return x % n;
            }
        }
    }
}
