//! Counter-based random stream.
//!
//! A stream's output is a pure function of `(seed, stream, counter)`: the
//! seed keys a ChaCha8 block function, `stream` selects the nonce and
//! `counter` is the position in 64-bit words. Any party holding the three
//! numbers can reproduce (or skip to) any part of the sequence, which is what
//! lets section assignment be recomputed independently by every worker.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Serializable position of an [`RngStream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    pub counter: u64,
}

#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    core: ChaCha8Rng,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at(seed, stream, 0)
    }

    pub fn at(seed: u64, stream: u64, counter: u64) -> Self {
        let mut core = ChaCha8Rng::seed_from_u64(seed);
        core.set_stream(stream);
        core.set_word_pos(u128::from(counter) * 2);
        Self { seed, stream, core }
    }

    pub fn from_state(state: RngState) -> Self {
        Self::at(state.seed, state.stream, state.counter)
    }

    pub fn state(&self) -> RngState {
        RngState {
            seed: self.seed,
            stream: self.stream,
            counter: self.counter(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 64-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        (self.core.get_word_pos() / 2) as u64
    }

    /// Uniform real in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.core.next_u64() >> 11) as f64 * INV_2_53
    }

    /// A fresh stream (counter 0) under the same seed whose identifier is a
    /// hash of this stream's identifier and `key`.
    pub fn derive(&self, key: u64) -> RngStream {
        RngStream::new(self.seed, mix(self.stream, key))
    }
}

impl RngCore for RngStream {
    // Always consumes a whole 64-bit word so that `counter` stays exact.
    fn next_u32(&mut self) -> u32 {
        self.core.next_u64() as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.core.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream", &self.stream)
            .field("counter", &self.counter())
            .finish()
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.state() == other.state()
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b).rotate_left(17))
}

/// Hash of an ordered pair, used to key recursion nodes by their range.
pub(crate) fn pair_key(lo: u64, hi: u64) -> u64 {
    mix(splitmix64(lo), hi)
}
