//! Counter-based random streams.
//!
//! A stream is ChaCha8 keyed by a 64-bit master seed and a tag, with the
//! 64-bit ChaCha stream id selecting the trial and the block counter
//! addressing words inside it. Any `(seed, tag, stream, counter)` tuple can
//! be regenerated in O(1), which is what lets channel codebooks stay lazy.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into one; used for sweep point seeds and key derivation.
pub fn mix64(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(23) ^ GOLDEN.wrapping_mul(b | 1))
}

fn derive_key(master: u64, tag: u64) -> [u8; 32] {
    let mut state = mix64(master, tag);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// Independent purposes inside one trial. Each gets its own ChaCha key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Trial = 0,
    Message = 1,
    Noise = 2,
    ChannelCodebook = 3,
    Source = 4,
    SourceCodebook = 5,
    Header = 6,
}

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Generic stream for `(master, stream)`; identical to [`seed_stream`].
    pub fn new(master: u64, stream: u64) -> Self {
        Self::keyed(derive_key(master, Purpose::Trial as u64), stream)
    }

    pub fn tagged(master: u64, tag: u64, stream: u64) -> Self {
        Self::keyed(derive_key(master, tag), stream)
    }

    pub(crate) fn keyed(key: [u8; 32], stream: u64) -> Self {
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Position in 32-bit words from the start of the stream.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn seek(&mut self, counter: u128) {
        self.inner.set_word_pos(counter);
    }

    pub fn stream_id(&self) -> u64 {
        self.inner.get_stream()
    }

    /// Re-targets to another stream under the same key, at counter 0.
    pub fn set_stream(&mut self, stream: u64) {
        self.inner.set_stream(stream);
        self.inner.set_word_pos(0);
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }
}

impl RngCore for RngStream {
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

/// Stream for trial `trial_id` under `master`.
pub fn seed_stream(master: u64, trial_id: u64) -> RngStream {
    RngStream::new(master, trial_id)
}

/// Per-trial randomness split by purpose.
///
/// Two trials with the same `(master, trial)` see the same message, noise and
/// codebooks whatever the decoding mode, which couples full-decoder and
/// true-path runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub master: u64,
    pub trial: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, trial: u64) -> Self {
        Self { master, trial }
    }

    pub fn stream(&self, purpose: Purpose) -> RngStream {
        RngStream::tagged(self.master, purpose as u64, self.trial)
    }

    /// Key for a family of streams private to this trial, indexed by the caller
    /// (codebooks use the time index or codeword index as stream id).
    pub fn family_key(&self, purpose: Purpose) -> [u8; 32] {
        derive_key(mix64(self.master, self.trial), 0x100 | purpose as u64)
    }
}
