//! Stateless counter-based randomness.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed
//! and a counter, so any edge of any instance can be regenerated in
//! isolation. The construction is fixed and must not change between
//! versions; alternate implementations reproduce it exactly as follows
//! (all arithmetic is wrapping on unsigned 64-bit integers):
//!
//! ```text
//! mix64(z):
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     return z ^ (z >> 31)
//!
//! channel_key(seed, channel):           channel: Length = 0, Cost = 1
//!     return mix64(seed + 0x9E3779B97F4A7C15 * (channel + 1))
//!
//! edge_bits(seed, u, v, channel):       requires u < v < 2^32
//!     ctr = (u << 32) | v
//!     return mix64(channel_key(seed, channel) ^ mix64(ctr))
//!
//! unit(bits):                           maps to [2^-53, 1]
//!     return ((bits >> 11) + 1) * 2^-53   (exact in IEEE-754 binary64)
//! ```

/// Weyl increment used by SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// The SplitMix64 output finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which of the two independent weights on an edge is being drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Length = 0,
    Cost = 1,
}

#[inline]
pub fn channel_key(seed: u64, channel: Channel) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(channel as u64 + 1)))
}

/// Mixed counter for the unordered pair `u < v`.
#[inline(always)]
pub(crate) fn edge_counter(u: usize, v: usize) -> u64 {
    debug_assert!(u < v);
    mix64(((u as u64) << 32) | v as u64)
}

#[inline]
pub fn edge_bits(seed: u64, u: usize, v: usize, channel: Channel) -> u64 {
    mix64(channel_key(seed, channel) ^ edge_counter(u, v))
}

/// Map 64 random bits to a uniform double in `[2^-53, 1]`.
#[inline(always)]
pub fn unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * TWO_POW_NEG_53
}

/// A sequential stream built on the same mixer, for Monte Carlo work that is
/// not tied to graph edges (bound checks, sampling tests).
#[derive(Debug, Clone)]
pub struct CounterStream {
    key: u64,
    counter: u64,
}

impl CounterStream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x5DEE_CE66_D1CE_4E5B),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform on `[2^-53, 1]`.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        unit(self.next_u64())
    }
}
