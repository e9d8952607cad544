//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit value. Child streams
//! are keyed by hashing the parent key with an index, so replicate `b` of a
//! simulation always sees the same numbers no matter which worker runs it or
//! in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROOT_TAG: u64 = 0x6a09_e667_f3bc_c908;
const FORK_TAG: u64 = 0xbb67_ae85_84ca_a73b;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on `u64`.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn combine(key: u64, index: u64) -> u64 {
    mix(key ^ mix(index.wrapping_add(GOLDEN)))
}

fn expand(key: u64) -> [u8; 32] {
    let mut seed = [0u8; 32];
    let mut state = key;
    for chunk in seed.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix(state).to_le_bytes());
    }
    seed
}

/// A deterministic random stream that can spawn independent children.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    forks: u64,
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Root stream for a user-supplied seed.
    pub fn new(seed: u64) -> Self {
        Self::from_key(mix(seed ^ ROOT_TAG))
    }

    fn from_key(key: u64) -> Self {
        Self {
            key,
            forks: 0,
            inner: ChaCha8Rng::from_seed(expand(key)),
        }
    }

    /// The child stream at `index`. Pure: it depends only on this stream's
    /// key and `index`, never on how much of this stream has been consumed.
    pub fn substream(&self, index: u64) -> Self {
        Self::from_key(combine(self.key, index))
    }

    /// A fresh child stream; successive calls return distinct streams.
    pub fn fork(&mut self) -> Self {
        let child = combine(self.key ^ FORK_TAG, self.forks);
        self.forks += 1;
        Self::from_key(child)
    }

    /// Uniform draw on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
