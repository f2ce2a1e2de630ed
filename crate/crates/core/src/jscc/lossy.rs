use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::info::Pmf;
use crate::rate_distortion::SourceModel;
use crate::rng::RngStream;
use crate::vlf::LazyCodebook;

/// Absolute slack on the block distortion sum when testing `<= k d`.
pub const DISTORTION_SLACK: f64 = 1e-9;

/// Letter-level view of a discrete source for block coding.
#[derive(Debug, Clone)]
pub struct BlockSource {
    pub k: usize,
    pmf: Pmf,
    dist: Vec<Vec<f64>>,
}

impl BlockSource {
    pub fn new(src: &SourceModel, k: usize) -> Result<Self> {
        match src {
            SourceModel::Discrete { pmf, distortion } if k >= 1 => Ok(Self {
                k,
                pmf: pmf.clone(),
                dist: distortion.clone(),
            }),
            SourceModel::Discrete { .. } => {
                Err(Error::Infeasible("block length must be at least 1".into()))
            }
            SourceModel::Gaussian { .. } => Err(Error::Unsupported(
                "lossy codebooks need a discrete source".into(),
            )),
        }
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn sample(&self, rng: &mut RngStream, out: &mut Vec<u16>) {
        out.clear();
        out.extend((0..self.k).map(|_| self.pmf.quantile(rng.uniform()) as u16));
    }

    /// Sum (not average) of letter distortions.
    pub fn total_distortion(&self, s: &[u16], z: &[u16]) -> f64 {
        s.iter()
            .zip(z)
            .map(|(&a, &b)| self.dist[a as usize][b as usize])
            .sum()
    }

    /// Whether `z` is within average distortion `d` of `s`, aborting as soon as the budget is spent.
    pub fn within(&self, s: &[u16], z: &[u16], d: f64) -> bool {
        let budget = d * self.k as f64 + DISTORTION_SLACK;
        let mut acc = 0.0;
        for (&a, &b) in s.iter().zip(z) {
            acc += self.dist[a as usize][b as usize];
            if acc > budget {
                return false;
            }
        }
        true
    }
}

/// `M` codewords i.i.d. from a product reproduction law; codeword `m` is its own ChaCha stream.
#[derive(Debug, Clone)]
pub struct LossyCodebook {
    inner: LazyCodebook,
    pub k: usize,
    pub size: usize,
}

impl LossyCodebook {
    pub fn new(key: [u8; 32], generator: &Pmf, k: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Infeasible(
                "codebook needs at least one codeword".into(),
            ));
        }
        Ok(Self {
            inner: LazyCodebook::new(key, generator)?,
            k,
            size,
        })
    }

    pub fn codeword(&self, m: usize, out: &mut Vec<u16>) {
        self.inner.column_into(m as u64 + 1, self.k, out);
    }

    /// All codewords back to back, `k` symbols each.
    pub fn materialize(&self) -> Vec<u16> {
        let mut all = Vec::with_capacity(self.size * self.k);
        let mut cw = Vec::with_capacity(self.k);
        for m in 0..self.size {
            self.codeword(m, &mut cw);
            all.extend_from_slice(&cw);
        }
        all
    }
}

/// First codeword within distortion `d`; a miss maps to index 0 with `hit = false`.
pub fn dball_encode(
    src: &BlockSource,
    s: &[u16],
    book: &LossyCodebook,
    d: f64,
    scratch: &mut Vec<u16>,
) -> (usize, bool) {
    for m in 0..book.size {
        book.codeword(m, scratch);
        if src.within(s, scratch, d) {
            return (m, true);
        }
    }
    (0, false)
}

/// Index of the closest codeword in a materialized book, smallest index on ties.
pub fn min_distortion_encode(src: &BlockSource, s: &[u16], points: &[u16]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (m, z) in points.chunks_exact(src.k).enumerate() {
        let mut acc = 0.0;
        for (&a, &b) in s.iter().zip(z) {
            acc += src.dist[a as usize][b as usize];
            if acc >= best.1 {
                break;
            }
        }
        if acc < best.1 {
            best = (m, acc);
        }
    }
    best.0
}

/// Source blocks grouped by type: each entry is `(type probability, P[Z^k lands in the d-ball])`.
#[derive(Debug, Clone)]
pub struct HitProfile {
    pub types: Vec<(f64, f64)>,
}

const MAX_TYPES: usize = 1 << 20;

impl HitProfile {
    /// Exact profile by enumerating types and convolving per-letter distortion laws.
    pub fn new(src: &BlockSource, generator: &Pmf, d: f64) -> Result<Self> {
        let a = src.pmf.len();
        let k = src.k;
        let budget = d * k as f64 + DISTORTION_SLACK;
        // Distortion law of one letter under the generator, on a 1e-9 grid.
        let letter_law: Vec<Vec<(i64, f64)>> = (0..a)
            .map(|s| {
                let mut law: HashMap<i64, f64> = HashMap::new();
                for (z, &q) in generator.probs().iter().enumerate() {
                    let x = src.dist[s][z];
                    if q > 0.0 && x.is_finite() {
                        *law.entry((x * 1e9).round() as i64).or_default() += q;
                    }
                }
                law.into_iter().collect()
            })
            .collect();
        let cut = (budget * 1e9).floor() as i64;
        let ln_fact: Vec<f64> = (0..=k)
            .scan(0.0, |acc, i| {
                if i > 0 {
                    *acc += (i as f64).ln();
                }
                Some(*acc)
            })
            .collect();
        let mut types = Vec::new();
        let mut counts = vec![0usize; a];
        compositions(k, a, &mut counts, 0, &mut |n| {
            if types.len() >= MAX_TYPES {
                return;
            }
            let mut ln_w = ln_fact[k];
            for (s, &c) in n.iter().enumerate() {
                if c > 0 {
                    let p = src.pmf.get(s);
                    ln_w += if p > 0.0 {
                        c as f64 * p.ln()
                    } else {
                        f64::NEG_INFINITY
                    };
                    ln_w -= ln_fact[c];
                }
            }
            if ln_w == f64::NEG_INFINITY {
                return;
            }
            // Law of the sum, pruned above the budget since distortions are non-negative.
            let mut law: HashMap<i64, f64> = HashMap::from([(0, 1.0)]);
            for (s, &c) in n.iter().enumerate() {
                for _ in 0..c {
                    let mut next: HashMap<i64, f64> = HashMap::with_capacity(law.len() * 2);
                    for (&x, &px) in &law {
                        for &(y, py) in &letter_law[s] {
                            if x + y <= cut {
                                *next.entry(x + y).or_default() += px * py;
                            }
                        }
                    }
                    law = next;
                }
            }
            types.push((ln_w.exp(), law.values().sum::<f64>().min(1.0)));
        });
        if types.len() >= MAX_TYPES {
            return Err(Error::TooLarge {
                what: "source types",
                size: types.len() as u64,
                limit: MAX_TYPES as u64,
            });
        }
        Ok(Self { types })
    }

    /// `P[no codeword among M hits] = sum_t w_t (1 - p_t)^M`.
    pub fn miss_probability(&self, m: u64) -> f64 {
        self.types
            .iter()
            .map(|&(w, p)| w * (1.0 - p).powf(m as f64))
            .sum()
    }

    /// Smallest codebook size with miss probability at most `target`.
    pub fn size_for_miss(&self, target: f64, limit: u64) -> Result<u64> {
        if self.miss_probability(1) <= target {
            return Ok(1);
        }
        if self.miss_probability(limit) > target {
            return Err(Error::TooLarge {
                what: "codebook size for the miss target",
                size: limit + 1,
                limit,
            });
        }
        let (mut lo, mut hi) = (1u64, limit);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.miss_probability(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Law of the first-hit index over `M` codewords, misses sent as index 0.
    pub fn index_law(&self, m: usize) -> Result<Pmf> {
        let mut probs = vec![0.0; m];
        for &(w, p) in &self.types {
            let mut survive = w;
            for slot in probs.iter_mut() {
                *slot += survive * p;
                survive *= 1.0 - p;
            }
            probs[0] += survive;
        }
        Pmf::from_weights(probs)
    }
}

fn compositions(
    total: usize,
    parts: usize,
    counts: &mut Vec<usize>,
    at: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if at + 1 == parts {
        counts[at] = total;
        f(counts);
        return;
    }
    for c in 0..=total {
        counts[at] = c;
        compositions(total - c, parts, counts, at + 1, f);
    }
}
