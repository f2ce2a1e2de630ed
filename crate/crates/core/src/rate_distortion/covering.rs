//! Exact `(d, eps)`-entropy of short source blocks.
//!
//! A quantizer is a partition of the block alphabet into cells, each cell
//! labelled by a reproduction within distortion `d` of its members (except
//! for an excess set of mass at most `eps`). Moving probability from a cell to
//! a heavier one never increases entropy, so some optimal quantizer is
//! "first cover": the heaviest cell takes its whole ball plus all excess
//! points, the next takes what is left of its ball, and so on. A memoized
//! search over remaining-point bitmasks then finds the exact optimum.

use super::solver::ba_rate_distortion;
use super::source::SourceModel;
use crate::error::{Error, Result};
use crate::info::Pmf;

/// Largest block alphabet the bitmask search accepts.
pub const MAX_BLOCK_POINTS: usize = 20;
const MAX_REPRODUCTIONS: usize = 4096;
const BALL_SLACK: f64 = 1e-12;

/// The `k`-fold product of a discrete source, letters in mixed radix (first letter most significant).
#[derive(Debug, Clone)]
pub struct BlockAlphabet {
    pub k: usize,
    pub n_source: usize,
    pub n_repro: usize,
    pub probs: Vec<f64>,
    letter_dist: Vec<Vec<f64>>,
}

impl BlockAlphabet {
    pub fn new(src: &SourceModel, k: usize) -> Result<Self> {
        let (pmf, dist) = match src {
            SourceModel::Discrete { pmf, distortion } => (pmf, distortion),
            SourceModel::Gaussian { .. } => {
                return Err(Error::Unsupported(
                    "block alphabets need a discrete source".into(),
                ))
            }
        };
        if k == 0 {
            return Err(Error::Infeasible("block length must be at least 1".into()));
        }
        let n_source = checked_pow(pmf.len(), k, "source block alphabet", 1 << 24)?;
        let n_repro = checked_pow(dist[0].len(), k, "reproduction block alphabet", 1 << 24)?;
        let probs = (0..n_source)
            .map(|s| {
                digits(s, pmf.len(), k)
                    .iter()
                    .map(|&a| pmf.get(a))
                    .product()
            })
            .collect();
        Ok(Self {
            k,
            n_source,
            n_repro,
            probs,
            letter_dist: dist.clone(),
        })
    }

    pub fn source_letters(&self, s: usize) -> Vec<usize> {
        digits(s, self.letter_dist.len(), self.k)
    }

    pub fn repro_letters(&self, z: usize) -> Vec<usize> {
        digits(z, self.letter_dist[0].len(), self.k)
    }

    /// Per-letter average distortion between block indices.
    pub fn distortion(&self, s: usize, z: usize) -> f64 {
        let a = self.source_letters(s);
        let b = self.repro_letters(z);
        a.iter()
            .zip(&b)
            .map(|(&x, &y)| self.letter_dist[x][y])
            .sum::<f64>()
            / self.k as f64
    }

    pub fn within(&self, s: usize, z: usize, d: f64) -> bool {
        self.distortion(s, z) <= d + BALL_SLACK
    }
}

fn checked_pow(base: usize, k: usize, what: &'static str, limit: u64) -> Result<usize> {
    let mut acc: u64 = 1;
    for _ in 0..k {
        acc = acc.saturating_mul(base as u64);
        if acc > limit {
            return Err(Error::TooLarge {
                what,
                size: acc,
                limit,
            });
        }
    }
    Ok(acc as usize)
}

fn digits(mut x: usize, radix: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = x % radix;
        x /= radix;
    }
    out
}

/// One cell of a quantizer: a reproduction block and the source blocks mapped to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub reproduction: usize,
    pub members: Vec<usize>,
    pub mass: f64,
}

/// An optimal quantizer found by [`brute_force_deps_entropy`].
#[derive(Debug, Clone)]
pub struct CoveringMap {
    /// Cells sorted by non-increasing mass.
    pub cells: Vec<Cell>,
    /// Source block index to cell index.
    pub assignment: Vec<usize>,
    /// Output entropy in nats.
    pub entropy: f64,
    /// Probability that the distortion exceeds `d`.
    pub excess: f64,
}

impl CoveringMap {
    pub fn cell_pmf(&self) -> Pmf {
        Pmf::from_weights(self.cells.iter().map(|c| c.mass).collect())
            .expect("cells carry all the mass")
    }
}

fn eta(q: f64) -> f64 {
    if q > 0.0 {
        -q * q.ln()
    } else {
        0.0
    }
}

struct Search {
    mass: Vec<f64>,
    balls: Vec<(u32, usize)>,
    memo: Vec<f64>,
    choice: Vec<u32>,
}

impl Search {
    fn first_cover(&mut self, rest: u32) -> f64 {
        if rest == 0 {
            return 0.0;
        }
        let cached = self.memo[rest as usize];
        if !cached.is_nan() {
            return cached;
        }
        let mut best = f64::INFINITY;
        let mut arg = u32::MAX;
        for i in 0..self.balls.len() {
            let hit = self.balls[i].0 & rest;
            if hit == 0 {
                continue;
            }
            let v = eta(self.mass[hit as usize]) + self.first_cover(rest & !hit);
            if v < best {
                best = v;
                arg = i as u32;
            }
        }
        self.memo[rest as usize] = best;
        self.choice[rest as usize] = arg;
        best
    }
}

/// Exact `H_{d,eps}` of the `k`-block of a discrete source, with the quantizer achieving it.
pub fn brute_force_deps_entropy(
    src: &SourceModel,
    k: usize,
    d: f64,
    eps: f64,
) -> Result<CoveringMap> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(crate::error::out_of_range("eps", eps, "0 <= eps <= 1"));
    }
    let block = BlockAlphabet::new(src, k)?;
    let n = block.n_source;
    if n > MAX_BLOCK_POINTS {
        return Err(Error::TooLarge {
            what: "source block alphabet",
            size: n as u64,
            limit: MAX_BLOCK_POINTS as u64,
        });
    }
    if block.n_repro > MAX_REPRODUCTIONS {
        return Err(Error::TooLarge {
            what: "reproduction block alphabet",
            size: block.n_repro as u64,
            limit: MAX_REPRODUCTIONS as u64,
        });
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut mass = vec![0.0; 1usize << n];
    for m in 1..(1usize << n) {
        let low = m.trailing_zeros() as usize;
        mass[m] = mass[m & (m - 1)] + block.probs[low];
    }
    // Distinct non-empty balls, first reproduction index kept for each.
    let mut balls: Vec<(u32, usize)> = Vec::new();
    for z in 0..block.n_repro {
        let mask = (0..n)
            .filter(|&s| block.within(s, z, d))
            .fold(0u32, |m, s| m | (1 << s));
        if mask != 0 && !balls.iter().any(|(b, _)| *b == mask) {
            balls.push((mask, z));
        }
    }
    let mut search = Search {
        mass,
        balls,
        memo: vec![f64::NAN; 1 << n],
        choice: vec![u32::MAX; 1 << n],
    };

    // Heaviest cell: a ball plus an excess set drawn from outside it.
    let budget = eps + 1e-15;
    let mut best = (f64::INFINITY, u32::MAX, 0u32);
    if search.mass[full as usize] <= budget {
        best = (0.0, u32::MAX, full);
    }
    for i in 0..search.balls.len() {
        let ball = search.balls[i].0;
        let outside = full & !ball;
        let mut u = outside;
        loop {
            if search.mass[u as usize] <= budget {
                let v = eta(search.mass[(ball | u) as usize]) + search.first_cover(outside & !u);
                if v < best.0 {
                    best = (v, i as u32, u);
                }
            }
            if u == 0 {
                break;
            }
            u = (u - 1) & outside;
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Infeasible(format!(
            "no quantizer meets distortion {d} with excess {eps}"
        )));
    }

    let mut cells = Vec::new();
    let (_, first, excess_set) = best;
    let mut rest = full;
    if first == u32::MAX {
        // Everything is excess: one arbitrary cell.
        cells.push(Cell {
            reproduction: 0,
            members: (0..n).collect(),
            mass: 1.0,
        });
        rest = 0;
    } else {
        let (ball, z) = search.balls[first as usize];
        let members = ball | excess_set;
        cells.push(cell_from(members, z, &search.mass));
        rest &= !members;
    }
    while rest != 0 {
        search.first_cover(rest);
        let (ball, z) = search.balls[search.choice[rest as usize] as usize];
        let hit = ball & rest;
        cells.push(cell_from(hit, z, &search.mass));
        rest &= !hit;
    }
    cells.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    let mut assignment = vec![0; n];
    for (c, cell) in cells.iter().enumerate() {
        for &s in &cell.members {
            assignment[s] = c;
        }
    }
    let entropy = cells.iter().map(|c| eta(c.mass)).sum();
    let excess = (0..n)
        .filter(|&s| !block.within(s, cells[assignment[s]].reproduction, d))
        .map(|s| block.probs[s])
        .sum();
    Ok(CoveringMap {
        cells,
        assignment,
        entropy,
        excess,
    })
}

fn cell_from(mask: u32, z: usize, mass: &[f64]) -> Cell {
    Cell {
        reproduction: z,
        members: (0..32).filter(|&s| mask & (1 << s) != 0).collect(),
        mass: mass[mask as usize],
    }
}

/// `R_{S^k}(d, eps)`: minimal mutual information with excess-distortion probability at most `eps`, in nats.
///
/// Exhaustive over the block alphabet, so only usable at tiny `k`.
pub fn excess_rate(src: &SourceModel, k: usize, d: f64, eps: f64) -> Result<f64> {
    let block = BlockAlphabet::new(src, k)?;
    if block.n_source * block.n_repro > 1 << 22 {
        return Err(Error::TooLarge {
            what: "block distortion table",
            size: (block.n_source * block.n_repro) as u64,
            limit: 1 << 22,
        });
    }
    let hit: Vec<Vec<bool>> = (0..block.n_source)
        .map(|s| (0..block.n_repro).map(|z| block.within(s, z, d)).collect())
        .collect();
    if eps == 0.0 {
        return Ok(zero_excess_rate(&block.probs, &hit));
    }
    let rho: Vec<Vec<f64>> = hit
        .iter()
        .map(|r| r.iter().map(|&h| if h { 0.0 } else { 1.0 }).collect())
        .collect();
    let pmf = Pmf::from_weights(block.probs.clone())?;
    let excess_src = SourceModel::discrete(pmf, rho)?;
    let (_, rho_max) = super::source::d_min_max(&excess_src);
    if eps >= rho_max {
        return Ok(0.0);
    }
    Ok(ba_rate_distortion(&excess_src, eps)?.rate)
}

/// `min_Q E[-ln Q(B(S))]` by the multiplicative fixed point, stopped on the duality gap.
fn zero_excess_rate(probs: &[f64], hit: &[Vec<bool>]) -> f64 {
    let n_z = hit[0].len();
    let mut q = vec![1.0 / n_z as f64; n_z];
    let ball_mass = |q: &[f64], s: usize| -> f64 {
        hit[s]
            .iter()
            .zip(q)
            .filter(|(h, _)| **h)
            .map(|(_, x)| x)
            .sum()
    };
    for _ in 0..1_000_000 {
        let mut g = vec![0.0; n_z];
        for (s, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let b = ball_mass(&q, s);
            for z in 0..n_z {
                if hit[s][z] {
                    g[z] += p / b;
                }
            }
        }
        let gap = g.iter().copied().fold(0.0f64, f64::max).ln();
        if gap <= 1e-13 {
            break;
        }
        q.iter_mut().zip(&g).for_each(|(x, gz)| *x *= gz);
        let t: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= t);
    }
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| -p * ball_mass(&q, s).ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn equiprobable() -> SourceModel {
        SourceModel::binary_hamming(0.5).unwrap()
    }

    /// Every map from source blocks to reproductions, for tiny alphabets.
    fn exhaustive(src: &SourceModel, k: usize, d: f64, eps: f64) -> f64 {
        let b = BlockAlphabet::new(src, k).unwrap();
        let n = b.n_source;
        let hit: Vec<Vec<bool>> = (0..n)
            .map(|s| (0..b.n_repro).map(|z| b.within(s, z, d)).collect())
            .collect();
        let mut best = f64::INFINITY;
        let mut map = vec![0usize; n];
        let mut mass = vec![0.0; b.n_repro];
        loop {
            let excess: f64 = (0..n)
                .filter(|&s| !hit[s][map[s]])
                .map(|s| b.probs[s])
                .sum();
            if excess <= eps + 1e-15 {
                mass.iter_mut().for_each(|m| *m = 0.0);
                for s in 0..n {
                    mass[map[s]] += b.probs[s];
                }
                best = best.min(mass.iter().map(|&m| eta(m)).sum());
            }
            let mut i = 0;
            loop {
                if i == n {
                    return best;
                }
                map[i] += 1;
                if map[i] < b.n_repro {
                    break;
                }
                map[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let src = equiprobable();
        let m = brute_force_deps_entropy(&src, 3, 1.0, 0.0).unwrap();
        assert_eq!(m.entropy, 0.0);
        assert_eq!(m.cells.len(), 1);
        let m = brute_force_deps_entropy(&src, 1, 0.0, 0.0).unwrap();
        assert!((m.entropy - LN_2).abs() < 1e-15);
    }

    #[test]
    fn two_bit_radius_one_covering() {
        // Balls of Hamming radius 1 in {0,1}^2 hold 3 points: cells {3/4, 1/4}.
        let m = brute_force_deps_entropy(&equiprobable(), 2, 0.5, 0.0).unwrap();
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((m.entropy - h).abs() < 1e-14);
        assert!((m.entropy / LN_2 - 0.811278).abs() < 1e-6);
        assert!((m.entropy - exhaustive(&equiprobable(), 2, 0.5, 0.0)).abs() < 1e-14);
        assert_eq!(m.excess, 0.0);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let skewed = SourceModel::binary_hamming(0.3).unwrap();
        let ternary = SourceModel::hamming(Pmf::new(vec![0.5, 0.3, 0.2]).unwrap());
        let mut cases = vec![(&skewed, 3, 0.34, 0.05)];
        for (src, k) in [(&skewed, 2), (&ternary, 1)] {
            for d in [0.0, 0.34, 0.5] {
                for eps in [0.0, 0.05, 0.3] {
                    cases.push((src, k, d, eps));
                }
            }
        }
        for (src, k, d, eps) in cases {
            let m = brute_force_deps_entropy(src, k, d, eps).unwrap();
            let oracle = exhaustive(src, k, d, eps);
            assert!(
                (m.entropy - oracle).abs() < 1e-12,
                "k {k} d {d} eps {eps}: {} vs {oracle}",
                m.entropy
            );
            assert!(m.excess <= eps + 1e-12);
        }
    }

    #[test]
    fn dominates_information_lower_bound() {
        let sources = [equiprobable(), SourceModel::binary_hamming(0.2).unwrap()];
        for src in &sources {
            for k in [1, 2] {
                for d in [0.0, 0.25, 0.5] {
                    for eps in [0.0, 0.1, 0.3] {
                        let h = brute_force_deps_entropy(src, k, d, eps).unwrap().entropy;
                        let r = excess_rate(src, k, d, eps).unwrap();
                        assert!(r <= h + 1e-9, "k {k} d {d} eps {eps}: R {r} > H {h}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_excess_rate_known_value() {
        // k=1 equiprobable binary at d=0: R = H = ln 2.
        assert!((excess_rate(&equiprobable(), 1, 0.0, 0.0).unwrap() - LN_2).abs() < 1e-12);
        // k=2, d=0.5: by symmetry Q is uniform on the 4 words and each ball has mass 3/4.
        let r = excess_rate(&equiprobable(), 2, 0.5, 0.0).unwrap();
        assert!((r - (4.0f64 / 3.0).ln()).abs() < 1e-10, "{r}");
    }

    #[test]
    fn rejects_large_blocks() {
        assert!(matches!(
            brute_force_deps_entropy(&equiprobable(), 5, 0.2, 0.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn assignment_is_consistent() {
        let m = brute_force_deps_entropy(&equiprobable(), 4, 0.25, 0.1).unwrap();
        let total: f64 = m.cells.iter().map(|c| c.mass).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (c, cell) in m.cells.iter().enumerate() {
            for &s in &cell.members {
                assert_eq!(m.assignment[s], c);
            }
        }
        assert!(m.cells.windows(2).all(|w| w[0].mass >= w[1].mass));
    }
}
