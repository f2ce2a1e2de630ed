//! Discrete memoryless and additive white Gaussian noise channels.

use crate::error::{out_of_range, Error, Result};
use crate::info::{InfoValue, Pmf};
use crate::rng::RngStream;

const ROW_TOLERANCE: f64 = 1e-12;
const BA_GAP: f64 = 1e-10;
const BA_MAX_ITERS: usize = 100_000;

/// Result of a Blahut-Arimoto capacity run.
#[derive(Debug, Clone)]
pub struct CapacitySolution {
    /// Nats per channel use.
    pub capacity: f64,
    pub input: Pmf,
    pub output: Pmf,
    /// Final duality gap `max_x D(W(.|x) || q) - I(p; W)`.
    pub gap: f64,
    pub iterations: usize,
}

/// A finite row-stochastic channel `W(y|x)` with its capacity quantities cached.
#[derive(Debug, Clone)]
pub struct Dmc {
    rows: Vec<Pmf>,
    n_out: usize,
    cap: CapacitySolution,
    a0: f64,
    // ln W(y|x) - ln q(y), row-major; -inf for impossible transitions.
    log_ratio: Vec<f64>,
}

impl Dmc {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::NotStochastic("no input symbols".into()));
        }
        let n_out = matrix[0].len();
        if n_out == 0 {
            return Err(Error::NotStochastic("no output symbols".into()));
        }
        let mut rows = Vec::with_capacity(matrix.len());
        for (x, row) in matrix.into_iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::NotStochastic(format!(
                    "row {x} has {} entries, expected {n_out}",
                    row.len()
                )));
            }
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::NotStochastic(format!(
                    "row {x} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::NotStochastic(format!("row {x} sums to {s}")));
            }
            rows.push(Pmf::new(row).map_err(|e| Error::NotStochastic(e.to_string()))?);
        }
        let cap = blahut_arimoto(&rows, n_out);
        let a0 = log_ratio_span(&rows);
        let log_ratio = rows
            .iter()
            .flat_map(|row| {
                row.probs()
                    .iter()
                    .zip(cap.output.probs())
                    .map(|(&w, &q)| {
                        if w > 0.0 {
                            (w / q).ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self {
            rows,
            n_out,
            cap,
            a0,
            log_ratio,
        })
    }

    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(out_of_range("crossover", p, "0 <= p <= 1"));
        }
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel with outputs `{0, 1, erasure}`.
    pub fn bec(erasure: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&erasure) {
            return Err(out_of_range("erasure", erasure, "0 <= p <= 1"));
        }
        Self::new(vec![
            vec![1.0 - erasure, 0.0, erasure],
            vec![0.0, 1.0 - erasure, erasure],
        ])
    }

    /// Z-channel: input 0 is received perfectly, input 1 flips to 0 with probability `p`.
    pub fn z_channel(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(out_of_range("flip", p, "0 <= p <= 1"));
        }
        Self::new(vec![vec![1.0, 0.0], vec![p, 1.0 - p]])
    }

    pub fn noiseless(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.n_out
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(y)
    }

    pub fn row(&self, x: usize) -> &Pmf {
        &self.rows[x]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.probs().to_vec()).collect()
    }

    /// Capacity in nats per use.
    pub fn capacity(&self) -> f64 {
        self.cap.capacity
    }

    /// Capacity-achieving input distribution.
    pub fn caid(&self) -> &Pmf {
        &self.cap.input
    }

    /// Capacity-achieving output distribution.
    pub fn caod(&self) -> &Pmf {
        &self.cap.output
    }

    pub fn capacity_solution(&self) -> &CapacitySolution {
        &self.cap
    }

    /// Largest log-ratio between two positive transition probabilities, in nats.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Information density as a raw float for inner loops; `-inf` when `W(y|x) = 0`.
    #[inline]
    pub fn density_raw(&self, x: usize, y: usize) -> f64 {
        self.log_ratio[x * self.n_out + y]
    }

    /// Samples `y ~ W(.|x)`.
    #[inline]
    pub fn step(&self, x: usize, rng: &mut RngStream) -> usize {
        self.rows[x].quantile(rng.uniform())
    }
}

pub fn ba_capacity(dmc: &Dmc) -> (f64, Pmf, Pmf) {
    let c = dmc.capacity_solution();
    (c.capacity, c.input.clone(), c.output.clone())
}

pub fn max_log_ratio_a0(dmc: &Dmc) -> InfoValue {
    InfoValue::Finite(dmc.a0())
}

pub fn dmc_step(dmc: &Dmc, x: usize, rng: &mut RngStream) -> usize {
    dmc.step(x, rng)
}

fn log_ratio_span(rows: &[Pmf]) -> f64 {
    let positive = rows
        .iter()
        .flat_map(|r| r.probs().iter().copied())
        .filter(|&w| w > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, 0.0f64), |(lo, hi), w| {
        (lo.min(w), hi.max(w))
    });
    (hi / lo).ln()
}

fn output_law(rows: &[Pmf], p: &[f64], n_out: usize) -> Vec<f64> {
    let mut q = vec![0.0; n_out];
    for (row, &px) in rows.iter().zip(p) {
        for (qy, &w) in q.iter_mut().zip(row.probs()) {
            *qy += px * w;
        }
    }
    q
}

fn divergences(rows: &[Pmf], q: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            row.probs()
                .iter()
                .zip(q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| w * (w / qy).ln())
                .sum()
        })
        .collect()
}

fn blahut_arimoto(rows: &[Pmf], n_out: usize) -> CapacitySolution {
    let n_in = rows.len();
    let mut p = vec![1.0 / n_in as f64; n_in];
    let mut iterations = 0;
    loop {
        let q = output_law(rows, &p, n_out);
        let dv = divergences(rows, &q);
        let mutual: f64 = p.iter().zip(&dv).map(|(a, b)| a * b).sum();
        let upper = dv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = (upper - mutual).max(0.0);
        if gap <= BA_GAP || iterations >= BA_MAX_ITERS {
            let output = Pmf::from_weights(q).expect("output law of a stochastic matrix");
            let input = Pmf::from_weights(p).expect("BA iterate stays a pmf");
            return CapacitySolution {
                capacity: mutual.max(0.0),
                input,
                output,
                gap,
                iterations,
            };
        }
        // Multiplicative update, shifted by the max for stability.
        let mut z = 0.0;
        for (px, d) in p.iter_mut().zip(&dv) {
            *px *= (d - upper).exp();
            z += *px;
        }
        p.iter_mut().for_each(|px| *px /= z);
        iterations += 1;
    }
}

/// Real-valued AWGN channel with noise variance `N0/2` per use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannel {
    n0: f64,
    sigma: f64,
}

impl AwgnChannel {
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(out_of_range("N0", n0, "N0 > 0"));
        }
        Ok(Self {
            n0,
            sigma: (n0 / 2.0).sqrt(),
        })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn noise_variance(&self) -> f64 {
        self.n0 / 2.0
    }

    #[inline]
    pub fn step(&self, x: f64, rng: &mut RngStream) -> f64 {
        x + self.sigma * rng.standard_normal()
    }
}

pub fn awgn_step(x: f64, ch: &AwgnChannel, rng: &mut RngStream) -> f64 {
    ch.step(x, rng)
}
