use rand::RngCore;

use crate::error::{Error, Result};
use crate::info::Pmf;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
enum Layout {
    /// Uniform input over `2^bits` symbols, `32 / bits` symbols per word.
    Packed { bits: u32 },
    /// One word per symbol, inverted through scaled cumulative thresholds.
    Threshold { cut: Vec<u64> },
}

/// An infinite i.i.d. codebook, generated on demand.
///
/// Column `n` (channel use `n >= 1`) is ChaCha stream `n` under the codebook
/// key; message `m` reads a fixed word offset inside it. A decoder that
/// needs every message reads the column sequentially, while one that tracks
/// only the true message seeks straight to its word.
#[derive(Debug, Clone)]
pub struct LazyCodebook {
    key: [u8; 32],
    layout: Layout,
    alphabet: usize,
}

impl LazyCodebook {
    pub fn new(key: [u8; 32], input: &Pmf) -> Result<Self> {
        let alphabet = input.len();
        if alphabet > u16::MAX as usize + 1 {
            return Err(Error::TooLarge {
                what: "input alphabet",
                size: alphabet as u64,
                limit: 1 << 16,
            });
        }
        let layout = match alphabet {
            1 | 2 | 4 | 16 | 256 if input.is_uniform() => Layout::Packed {
                bits: alphabet.trailing_zeros(),
            },
            _ => {
                let mut acc = 0.0;
                let cut = input.probs()[..alphabet - 1]
                    .iter()
                    .map(|p| {
                        acc += p;
                        (acc * 4_294_967_296.0).round() as u64
                    })
                    .collect();
                Layout::Threshold { cut }
            }
        };
        Ok(Self {
            key,
            layout,
            alphabet,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    fn column_stream(&self, n: u64) -> RngStream {
        RngStream::keyed(self.key, n)
    }

    #[inline]
    fn from_word(cut: &[u64], w: u32) -> u16 {
        cut.partition_point(|&c| c <= w as u64) as u16
    }

    /// Symbol of message `m` at channel use `n`.
    pub fn symbol(&self, m: usize, n: u64) -> usize {
        let mut rng = self.column_stream(n);
        match &self.layout {
            Layout::Packed { bits: 0 } => 0,
            Layout::Packed { bits } => {
                let per_word = 32 / bits;
                rng.seek((m / per_word as usize) as u128);
                let w = rng.next_u32();
                ((w >> ((m as u32 % per_word) * bits)) & ((1u32 << bits) - 1)) as usize
            }
            Layout::Threshold { cut } => {
                rng.seek(m as u128);
                Self::from_word(cut, rng.next_u32()) as usize
            }
        }
    }

    /// Fills `out` with the symbols of messages `0..count` at channel use `n`.
    pub fn column_into(&self, n: u64, count: usize, out: &mut Vec<u16>) {
        out.clear();
        let mut rng = self.column_stream(n);
        match &self.layout {
            Layout::Packed { bits: 0 } => out.resize(count, 0),
            Layout::Packed { bits } => {
                let per_word = (32 / bits) as usize;
                let mask = (1u32 << bits) - 1;
                while out.len() < count {
                    let mut w = rng.next_u32();
                    for _ in 0..per_word.min(count - out.len()) {
                        out.push((w & mask) as u16);
                        w >>= bits;
                    }
                }
            }
            Layout::Threshold { cut } => {
                out.extend((0..count).map(|_| Self::from_word(cut, rng.next_u32())));
            }
        }
    }
}
