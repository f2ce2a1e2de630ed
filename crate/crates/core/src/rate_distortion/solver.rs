use serde::{Deserialize, Serialize};

use super::source::{d_min_max, SourceModel};
use crate::error::{out_of_range, Error, Result};
use crate::info::{entropy, truncated_normal_mean, Pmf};

const BA_TOL: f64 = 1e-13;
const BA_MAX_ITERS: usize = 100_000;
const DISTORTION_TOL: f64 = 1e-12;

/// Reproduction marginal achieving the rate-distortion function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputLaw {
    Discrete { pmf: Pmf },
    Gaussian { variance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tilted {
    Table(Vec<f64>),
    Gaussian { variance: f64 },
}

/// One point on the rate-distortion curve with everything needed for second-order terms.
#[derive(Debug, Clone, PartialEq)]
pub struct RdSolution {
    /// Target distortion.
    pub d: f64,
    /// Nats per source letter.
    pub rate: f64,
    /// `-R'(d)`, nats per unit distortion; infinite in the lossless case.
    pub slope: f64,
    pub output: OutputLaw,
    /// Variance of the tilted information, nats squared.
    pub dispersion: f64,
    tilted: Tilted,
}

/// A source letter: an index for discrete sources, a real for Gaussian ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Letter {
    Index(usize),
    Real(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedInfoSample {
    pub letter: Letter,
    /// Nats.
    pub value: f64,
}

impl RdSolution {
    /// Almost-lossless operation: the reproduction equals the source.
    pub fn lossless(pmf: &Pmf) -> Self {
        let table: Vec<f64> = pmf.probs().iter().map(|&p| -p.ln()).collect();
        let rate = entropy(pmf).nats();
        Self {
            d: 0.0,
            rate,
            slope: f64::INFINITY,
            output: OutputLaw::Discrete { pmf: pmf.clone() },
            dispersion: variance_under(pmf, &table),
            tilted: Tilted::Table(table),
        }
    }

    pub fn gaussian(variance: f64, d: f64) -> Result<Self> {
        if !(d > 0.0 && d < variance) {
            return Err(out_of_range(
                "d",
                d,
                format!("d_min = 0 < d < d_max = {variance}"),
            ));
        }
        Ok(Self {
            d,
            rate: 0.5 * (variance / d).ln(),
            slope: 0.5 / d,
            output: OutputLaw::Gaussian {
                variance: variance - d,
            },
            dispersion: 0.5,
            tilted: Tilted::Gaussian { variance },
        })
    }

    /// Tilted information of a discrete letter. Panics for Gaussian solutions.
    #[inline]
    pub fn tilted(&self, s: usize) -> f64 {
        match &self.tilted {
            Tilted::Table(t) => t[s],
            Tilted::Gaussian { .. } => panic!("tilted(index) on a Gaussian solution"),
        }
    }

    /// Tilted information of a real letter. Panics for discrete solutions.
    #[inline]
    pub fn tilted_real(&self, x: f64) -> f64 {
        match &self.tilted {
            Tilted::Gaussian { variance } => self.rate + 0.5 * (x * x / variance - 1.0),
            Tilted::Table(_) => panic!("tilted(real) on a discrete solution"),
        }
    }

    pub fn tilted_table(&self) -> Option<&[f64]> {
        match &self.tilted {
            Tilted::Table(t) => Some(t),
            Tilted::Gaussian { .. } => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.tilted, Tilted::Gaussian { .. })
    }

    pub fn output_pmf(&self) -> Option<&Pmf> {
        match &self.output {
            OutputLaw::Discrete { pmf } => Some(pmf),
            OutputLaw::Gaussian { .. } => None,
        }
    }
}

pub fn tilted_information(rd: &RdSolution, letter: Letter) -> Result<TiltedInfoSample> {
    let value = match (&rd.tilted, letter) {
        (Tilted::Table(t), Letter::Index(s)) if s < t.len() => t[s],
        (Tilted::Gaussian { .. }, Letter::Real(x)) => rd.tilted_real(x),
        _ => {
            return Err(Error::Unsupported(format!(
                "letter {letter:?} does not belong to this source"
            )))
        }
    };
    Ok(TiltedInfoSample { letter, value })
}

/// `Var[j(S, d)]` in nats squared.
pub fn rate_dispersion(rd: &RdSolution, src: &SourceModel) -> f64 {
    match (src, &rd.tilted) {
        (SourceModel::Discrete { pmf, .. }, Tilted::Table(t)) => variance_under(pmf, t),
        _ => rd.dispersion,
    }
}

fn variance_under(pmf: &Pmf, values: &[f64]) -> f64 {
    let terms = || pmf.probs().iter().zip(values).filter(|(&p, _)| p > 0.0);
    let mean: f64 = terms().map(|(p, v)| p * v).sum();
    terms().map(|(p, v)| p * (v - mean).powi(2)).sum()
}

/// Converged Blahut-Arimoto state at a fixed slope.
#[derive(Debug, Clone)]
pub struct SlopePoint {
    pub lambda: f64,
    pub distortion: f64,
    pub rate: f64,
    /// Output marginal.
    pub q: Vec<f64>,
    /// Final value of `max_z ln c(z)`.
    pub gap: f64,
    pub iterations: usize,
}

/// Runs rate-distortion Blahut-Arimoto at slope `lambda`, starting from `q`.
pub fn ba_at_slope(pmf: &[f64], dist: &[Vec<f64>], lambda: f64, q: Vec<f64>) -> SlopePoint {
    let n_z = q.len();
    let kernel: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| {
                    if x.is_infinite() {
                        0.0
                    } else {
                        (-lambda * x).exp()
                    }
                })
                .collect()
        })
        .collect();
    let mut q = q;
    let mut norm = vec![0.0; pmf.len()];
    let mut c = vec![0.0; n_z];
    let mut iterations = 0;
    let mut gap;
    loop {
        for (ns, row) in norm.iter_mut().zip(&kernel) {
            *ns = row.iter().zip(&q).map(|(a, b)| a * b).sum();
        }
        c.iter_mut().for_each(|x| *x = 0.0);
        for ((&p, row), &ns) in pmf.iter().zip(&kernel).zip(&norm) {
            if p > 0.0 {
                for (cz, &a) in c.iter_mut().zip(row) {
                    *cz += p * a / ns;
                }
            }
        }
        gap = c.iter().map(|x| x.ln()).fold(f64::NEG_INFINITY, f64::max);
        if gap <= BA_TOL || iterations >= BA_MAX_ITERS {
            break;
        }
        let mut total = 0.0;
        for (qz, cz) in q.iter_mut().zip(&c) {
            *qz *= cz;
            total += *qz;
        }
        q.iter_mut().for_each(|x| *x /= total);
        iterations += 1;
    }
    // Evaluate the conditional law induced by the final marginal.
    let mut distortion = 0.0;
    let mut rate = 0.0;
    let q_out: Vec<f64> = q.iter().zip(&c).map(|(a, b)| a * b).collect();
    for (((&p, row), drow), &ns) in pmf.iter().zip(&kernel).zip(dist).zip(&norm) {
        if p == 0.0 {
            continue;
        }
        for z in 0..n_z {
            let w = q[z] * row[z] / ns;
            if w > 0.0 {
                distortion += p * w * drow[z];
                rate += p * w * (w / q_out[z]).ln();
            }
        }
    }
    SlopePoint {
        lambda,
        distortion,
        rate: rate.max(0.0),
        q,
        gap,
        iterations,
    }
}

/// Solves `R(d)` for a discrete source by bisection on the slope, or in closed form for Gaussian sources.
pub fn ba_rate_distortion(src: &SourceModel, d: f64) -> Result<RdSolution> {
    let (d_min, d_max) = d_min_max(src);
    if !(d > d_min && d < d_max) {
        return Err(out_of_range(
            "d",
            d,
            format!("d_min = {d_min} < d < d_max = {d_max}"),
        ));
    }
    let (pmf, dist) = match src {
        SourceModel::Gaussian { variance } => return RdSolution::gaussian(*variance, d),
        SourceModel::Discrete { pmf, distortion } => (pmf, distortion),
    };
    let p = pmf.probs();
    let n_z = dist[0].len();
    let mut q = vec![1.0 / n_z as f64; n_z];

    let eval = |lambda: f64, q: &mut Vec<f64>| {
        let pt = ba_at_slope(p, dist, lambda, q.clone());
        *q = pt.q.clone();
        pt
    };

    // Bracket: D(lambda) is non-increasing.
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut pt = eval(1.0, &mut q);
    if pt.distortion > d {
        while pt.distortion > d {
            lo = hi;
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::Infeasible(format!("slope diverges near d = {d}")));
            }
            pt = eval(hi, &mut q);
        }
    } else {
        while pt.distortion < d {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(Error::Infeasible(format!("slope vanishes near d = {d}")));
            }
            pt = eval(lo, &mut q);
        }
    }
    let mut best = pt;
    for _ in 0..200 {
        if (best.distortion - d).abs() <= DISTORTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pt = eval(mid, &mut q);
        if pt.distortion > d {
            lo = mid;
        } else {
            hi = mid;
        }
        if (pt.distortion - d).abs() < (best.distortion - d).abs() {
            best = pt;
        }
    }
    if (best.distortion - d).abs() > 1e-9 {
        return Err(Error::Infeasible(format!(
            "rate-distortion curve is linear around d = {d}; closest distortion {}",
            best.distortion
        )));
    }
    let lambda = best.lambda;
    let table: Vec<f64> = dist
        .iter()
        .map(|row| {
            let s: f64 = row
                .iter()
                .zip(&best.q)
                .filter(|(x, _)| x.is_finite())
                .map(|(&x, &qz)| qz * (-lambda * (x - d)).exp())
                .sum();
            -s.ln()
        })
        .collect();
    let output = Pmf::from_weights(best.q.clone())?;
    Ok(RdSolution {
        d,
        rate: best.rate,
        slope: lambda,
        output: OutputLaw::Discrete { pmf: output },
        dispersion: variance_under(pmf, &table),
        tilted: Tilted::Table(table),
    })
}

/// Two-term approximation `(1-eps) k R - sqrt(k V / 2 pi) exp(-Qinv(eps)^2 / 2)` in nats.
///
/// The `O(log k)` remainder is not included.
pub fn source_expansion(k: u64, eps: f64, rd: &RdSolution) -> Result<f64> {
    if k == 0 {
        return Err(out_of_range("k", 0.0, "k >= 1"));
    }
    let k = k as f64;
    Ok((1.0 - eps) * k * rd.rate - (k * rd.dispersion).sqrt() * truncated_normal_mean(eps)?)
}

/// Fixed-slope run on a uniform quantization of a Gaussian source, for cross-checking closed forms.
///
/// Returns `(distortion, rate)` at slope `1 / (2 d)`.
pub fn gaussian_quantized_check(variance: f64, d: f64, points: usize) -> (f64, f64) {
    let sd = variance.sqrt();
    let span = 8.0 * sd;
    let step = 2.0 * span / points as f64;
    let grid: Vec<f64> = (0..points)
        .map(|i| -span + (i as f64 + 0.5) * step)
        .collect();
    let weights: Vec<f64> = grid
        .iter()
        .map(|x| (-x * x / (2.0 * variance)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let dist: Vec<Vec<f64>> = grid
        .iter()
        .map(|s| grid.iter().map(|z| (s - z).powi(2)).collect())
        .collect();
    let q = pmf.clone();
    let pt = ba_at_slope(&pmf, &dist, 0.5 / d, q);
    (pt.distortion, pt.rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{binary_entropy, varentropy};
    use crate::quadrature::integrate;
    use std::f64::consts::LN_2;

    #[test]
    fn bernoulli_rate_closed_form() {
        let src = SourceModel::binary_hamming(0.2).unwrap();
        let rd = ba_rate_distortion(&src, 0.1).unwrap();
        let exact = binary_entropy(0.2) - binary_entropy(0.1);
        assert!((rd.rate - exact).abs() < 1e-9, "{} vs {exact}", rd.rate);
        assert!((rd.rate / LN_2 - 0.25293).abs() < 1e-5);
        // slope: ln((1-d)/d)
        assert!((rd.slope - 9f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn boundary_rejected() {
        let src = SourceModel::binary_hamming(0.2).unwrap();
        let err = ba_rate_distortion(&src, 0.2).unwrap_err();
        assert!(err.to_string().contains("d_max"), "{err}");
        assert!(ba_rate_distortion(&src, 0.0)
            .unwrap_err()
            .to_string()
            .contains("d_min"));
        assert!(ba_rate_distortion(&SourceModel::gaussian(1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn gaussian_closed_form() {
        let rd = ba_rate_distortion(&SourceModel::gaussian(1.0).unwrap(), 0.25).unwrap();
        assert_eq!(rd.rate / LN_2, 1.0);
        assert_eq!(rd.slope, 2.0);
        assert_eq!(rd.output, OutputLaw::Gaussian { variance: 0.75 });
        let j = tilted_information(&rd, Letter::Real(0.0)).unwrap().value;
        assert!((j - (0.5 * 4f64.ln() - 0.5)).abs() < 1e-15);
        assert!((j - 0.1931).abs() < 1e-4);
    }

    #[test]
    fn gaussian_tilted_matches_numeric_expectation() {
        // -ln E[exp(-lambda (s - Z)^2 + lambda d)], Z ~ N(0, var - d), by quadrature
        let (var, d) = (2.0, 0.5);
        let rd = RdSolution::gaussian(var, d).unwrap();
        let lambda = rd.slope;
        let zvar: f64 = var - d;
        for s in [-2.5, 0.0, 0.7, 3.0] {
            let f = |z: f64| {
                (-z * z / (2.0 * zvar)).exp() / (2.0 * std::f64::consts::PI * zvar).sqrt()
                    * (-lambda * (s - z) * (s - z) + lambda * d).exp()
            };
            let e = integrate(f, -40.0, 40.0, 1e-14).value;
            assert!((-e.ln() - rd.tilted_real(s)).abs() < 1e-9, "s = {s}");
        }
    }

    #[test]
    fn gaussian_dispersion_monte_carlo() {
        use crate::rng::seed_stream;
        let rd = RdSolution::gaussian(1.0, 0.3).unwrap();
        let n = 1_000_000;
        let mut rng = seed_stream(4, 0);
        let xs: Vec<f64> = (0..n)
            .map(|_| rd.tilted_real(rng.standard_normal()))
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Var of the sample variance: (mu4 - sigma^4)/n with mu4 = 15/16 * 4 ... use 4th moment estimate
        let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
        let se = ((m4 - v * v) / n as f64).sqrt();
        assert!((v - 0.5).abs() < 4.0 * se);
        assert!((m - rd.rate).abs() < 4.0 * (v / n as f64).sqrt());
    }

    #[test]
    fn binary_tilted_examples() {
        let src = SourceModel::binary_hamming(0.5).unwrap();
        let rd = ba_rate_distortion(&src, 0.11).unwrap();
        for s in 0..2 {
            let j = tilted_information(&rd, Letter::Index(s)).unwrap().value;
            assert!((j - (LN_2 - binary_entropy(0.11))).abs() < 1e-9);
        }
        assert!(rate_dispersion(&rd, &src).abs() < 1e-15);
        assert!(tilted_information(&rd, Letter::Real(0.0)).is_err());
    }

    #[test]
    fn bernoulli_dispersion_equals_varentropy() {
        let src = SourceModel::binary_hamming(0.2).unwrap();
        let pmf = src.pmf().unwrap().clone();
        for d in [0.02, 0.1, 0.15] {
            let rd = ba_rate_distortion(&src, d).unwrap();
            // j(s) = -ln P(s) - h(d)
            for s in 0..2 {
                assert!((rd.tilted(s) - (-pmf.get(s).ln() - binary_entropy(d))).abs() < 1e-9);
            }
            assert!((rate_dispersion(&rd, &src) - varentropy(&pmf)).abs() < 1e-9);
        }
        let v_bits = varentropy(&pmf) / LN_2 / LN_2;
        assert!((v_bits - 0.64).abs() < 1e-12);
    }

    #[test]
    fn lossless_mode() {
        let pmf = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        let rd = RdSolution::lossless(&pmf);
        assert_eq!(rd.tilted(0), 2f64.ln());
        assert_eq!(rd.tilted(2), 4f64.ln());
        assert!((rd.rate - 1.5 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn expansion_examples() {
        let src = SourceModel::binary_hamming(0.5).unwrap();
        let rd = ba_rate_distortion(&src, 0.11).unwrap();
        assert_eq!(source_expansion(100, 0.0, &rd).unwrap(), 100.0 * rd.rate);
        let v = source_expansion(100, 0.1, &rd).unwrap() / LN_2;
        assert!((v - 0.9 * 100.0 * (1.0 - binary_entropy(0.11) / LN_2)).abs() < 1e-7);
        assert!((v - 45.0076).abs() < 1e-3);
        let g = RdSolution::gaussian(1.0, 0.25).unwrap();
        let e = source_expansion(400, 0.05, &g).unwrap();
        let q = crate::info::normal_tail_inv(0.05).unwrap();
        let oracle = 0.95 * 400.0 * LN_2
            - (400.0 * 0.5 / (2.0 * std::f64::consts::PI)).sqrt() * (-q * q / 2.0).exp();
        assert!((e - oracle).abs() < 1e-10);
        assert!((0.95 * 400.0 * LN_2 - 263.40).abs() < 0.01);
        assert!((oracle - (263.3959 - 1.4586)).abs() < 1e-3);
        assert_eq!(source_expansion(10, 1.0, &g).unwrap(), 0.0);
        assert!(source_expansion(0, 0.1, &g).is_err());
    }

    #[test]
    fn rd_curve_shape_and_slope() {
        let sources = [
            SourceModel::binary_hamming(0.2).unwrap(),
            SourceModel::hamming(Pmf::new(vec![0.5, 0.3, 0.2]).unwrap()),
        ];
        for src in &sources {
            let (_, d_max) = d_min_max(src);
            let grid: Vec<f64> = (1..10).map(|i| d_max * i as f64 / 10.0).collect();
            let rates: Vec<f64> = grid
                .iter()
                .map(|&d| ba_rate_distortion(src, d).unwrap().rate)
                .collect();
            for w in rates.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            for w in rates.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9, "not convex");
            }
            for &d in &grid[1..8] {
                let h = 1e-4 * d_max;
                let rp = ba_rate_distortion(src, d + h).unwrap().rate;
                let rm = ba_rate_distortion(src, d - h).unwrap().rate;
                let fd = -(rp - rm) / (2.0 * h);
                let lam = ba_rate_distortion(src, d).unwrap().slope;
                assert!(((fd - lam) / lam).abs() < 1e-3, "d {d}: {fd} vs {lam}");
            }
        }
    }

    #[test]
    fn quantized_gaussian_close_to_closed_form() {
        let (dist, rate) = gaussian_quantized_check(1.0, 0.25, 128);
        assert!((dist - 0.25).abs() < 5e-3, "{dist}");
        assert!((rate - 0.5 * (1.0 / dist).ln()).abs() < 5e-3, "{rate}");
    }
}
