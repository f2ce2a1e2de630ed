use crate::error::{out_of_range, Result};
use crate::rng::RngStream;

/// Linear feedback scheme for one Gaussian sample.
///
/// Each use sends the receiver's current estimation error scaled to power
/// `snr * N0 / 2`; the receiver applies the scalar MMSE update, shrinking the
/// error variance by `1 + snr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkState {
    pub variance: f64,
    pub snr: f64,
    pub n0: f64,
    /// Receiver estimate of the sample.
    pub estimate: f64,
    /// Receiver error variance.
    pub mse: f64,
    /// Energy spent so far.
    pub energy: f64,
}

impl SkState {
    pub fn new(variance: f64, snr: f64, n0: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(out_of_range("variance", variance, "variance > 0"));
        }
        if !(snr > 0.0) {
            return Err(out_of_range("P", snr, "P > 0"));
        }
        if !(n0 > 0.0) {
            return Err(out_of_range("N0", n0, "N0 > 0"));
        }
        Ok(Self {
            variance,
            snr,
            n0,
            estimate: 0.0,
            mse: variance,
            energy: 0.0,
        })
    }

    /// One channel use carrying `sample`; `noise` is a standard normal draw.
    pub fn step(&mut self, sample: f64, noise: f64) {
        let noise_var = 0.5 * self.n0;
        let gain = (self.snr * noise_var / self.mse).sqrt();
        let x = gain * (sample - self.estimate);
        let y = x + noise_var.sqrt() * noise;
        self.energy += x * x;
        // E[e | y] = gain * mse / (gain^2 mse + N) * y
        self.estimate += gain * self.mse / (gain * gain * self.mse + noise_var) * y;
        self.mse /= 1.0 + self.snr;
    }
}

/// Outcome of one scheme run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkOutcome {
    pub estimate: f64,
    pub squared_error: f64,
    pub energy: f64,
}

/// Draws a sample from `N(0, variance)` and sends it over `n` uses.
pub fn sk_transmit(
    variance: f64,
    snr: f64,
    n: u32,
    n0: f64,
    rng: &mut RngStream,
) -> Result<SkOutcome> {
    let mut st = SkState::new(variance, snr, n0)?;
    let s = variance.sqrt() * rng.standard_normal();
    for _ in 0..n {
        st.step(s, rng.standard_normal());
    }
    Ok(SkOutcome {
        estimate: st.estimate,
        squared_error: (s - st.estimate).powi(2),
        energy: st.energy,
    })
}

/// `k` samples, sample `i` using slots `i, k + i, 2k + i, ...`; returns per-sample squared errors and total energy.
pub fn sk_block(
    k: usize,
    variance: f64,
    snr: f64,
    n_per: u32,
    n0: f64,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, f64)> {
    let mut states = vec![SkState::new(variance, snr, n0)?; k];
    let samples: Vec<f64> = (0..k)
        .map(|_| variance.sqrt() * rng.standard_normal())
        .collect();
    for slot in 0..k * n_per as usize {
        let i = slot % k;
        states[i].step(samples[i], rng.standard_normal());
    }
    let errors = states
        .iter()
        .zip(&samples)
        .map(|(st, s)| (s - st.estimate).powi(2))
        .collect();
    Ok((errors, states.iter().map(|st| st.energy).sum()))
}

/// Expected MSE after `n` uses.
pub fn sk_mse(variance: f64, snr: f64, n: u32) -> f64 {
    variance / (1.0 + snr).powi(n as i32)
}

/// `E / (N0 k R(d))` for the scheme at its own distortion: `snr / ln(1 + snr)`, which tends to 1 as `snr -> 0`.
pub fn sk_energy_ratio(snr: f64) -> f64 {
    snr / snr.ln_1p()
}
