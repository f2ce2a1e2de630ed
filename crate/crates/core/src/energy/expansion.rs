use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::info::normal_tail_inv;
use crate::rate_distortion::{source_expansion, RdSolution};

/// Leading terms of the minimum `E / N0` (nats) in each operating regime.
///
/// `k` counts source letters, or information bits for the `bits_*` kinds.
/// Remainders of order `log k` (or `1`) are not included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyExpansion {
    /// Average distortion with feedback: `k R`.
    AvgFb { k: u64 },
    /// Excess distortion with feedback, average energy.
    ExcessFb { k: u64, eps: f64 },
    /// Excess distortion without feedback: `k R + sqrt(k (2R + V)) Qinv(eps)`.
    ExcessNofb { k: u64, eps: f64 },
    /// Excess distortion without feedback under an average energy constraint: `(1 - eps) k R`.
    AvgPowerNofb { k: u64, eps: f64 },
    /// `k` equiprobable bits without feedback: `k ln 2 + sqrt(2 k ln 2) Qinv(eps) - ln(k) / 2`.
    BitsNofb { k: u64, eps: f64 },
    /// `k` equiprobable bits with feedback: `(1 - eps) k ln 2`.
    BitsFb { k: u64, eps: f64 },
}

impl EnergyExpansion {
    pub fn name(&self) -> &'static str {
        match self {
            EnergyExpansion::AvgFb { .. } => "avg_fb",
            EnergyExpansion::ExcessFb { .. } => "excess_fb",
            EnergyExpansion::ExcessNofb { .. } => "excess_nofb",
            EnergyExpansion::AvgPowerNofb { .. } => "avg_power_nofb",
            EnergyExpansion::BitsNofb { .. } => "bits_nofb",
            EnergyExpansion::BitsFb { .. } => "bits_fb",
        }
    }

    pub fn needs_source(&self) -> bool {
        !matches!(
            self,
            EnergyExpansion::BitsNofb { .. } | EnergyExpansion::BitsFb { .. }
        )
    }
}

fn check_eps(eps: f64, open: bool) -> Result<()> {
    let ok = if open {
        eps > 0.0 && eps < 1.0
    } else {
        (0.0..1.0).contains(&eps)
    };
    if ok {
        Ok(())
    } else {
        Err(out_of_range(
            "eps",
            eps,
            if open { "0 < eps < 1" } else { "0 <= eps < 1" },
        ))
    }
}

/// Evaluates `kind`; `rd` is required for every kind except the `bits_*` ones.
pub fn energy_expansion(kind: &EnergyExpansion, rd: Option<&RdSolution>) -> Result<f64> {
    let need = || {
        rd.ok_or_else(|| {
            Error::Infeasible(format!("{} needs a rate-distortion solution", kind.name()))
        })
    };
    let positive = |k: u64| {
        if k == 0 {
            Err(out_of_range("k", 0.0, "k >= 1"))
        } else {
            Ok(k as f64)
        }
    };
    match *kind {
        EnergyExpansion::AvgFb { k } => Ok(positive(k)? * need()?.rate),
        EnergyExpansion::ExcessFb { k, eps } => {
            check_eps(eps, false)?;
            source_expansion(k, eps, need()?)
        }
        EnergyExpansion::ExcessNofb { k, eps } => {
            check_eps(eps, true)?;
            let rd = need()?;
            let k = positive(k)?;
            Ok(k * rd.rate + (k * (2.0 * rd.rate + rd.dispersion)).sqrt() * normal_tail_inv(eps)?)
        }
        EnergyExpansion::AvgPowerNofb { k, eps } => {
            check_eps(eps, false)?;
            Ok((1.0 - eps) * positive(k)? * need()?.rate)
        }
        EnergyExpansion::BitsNofb { k, eps } => {
            check_eps(eps, true)?;
            let k = positive(k)?;
            Ok(k * LN_2 + (2.0 * k * LN_2).sqrt() * normal_tail_inv(eps)? - 0.5 * k.ln())
        }
        EnergyExpansion::BitsFb { k, eps } => {
            check_eps(eps, false)?;
            Ok((1.0 - eps) * positive(k)? * LN_2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate_distortion::{ba_rate_distortion, SourceModel};

    #[test]
    fn gaussian_no_feedback_example() {
        let rd = RdSolution::gaussian(1.0, 0.25).unwrap();
        let e = energy_expansion(
            &EnergyExpansion::ExcessNofb { k: 100, eps: 0.05 },
            Some(&rd),
        )
        .unwrap();
        let second = (100.0 * (2.0 * LN_2 + 0.5)).sqrt() * 1.6448536269514722;
        assert!((e - (100.0 * LN_2 + second)).abs() < 1e-9);
        assert!((second - 22.59).abs() < 5e-3);
    }

    #[test]
    fn excess_feedback_at_zero_eps() {
        let src = SourceModel::binary_hamming(0.2).unwrap();
        let rd = ba_rate_distortion(&src, 0.1).unwrap();
        let e =
            energy_expansion(&EnergyExpansion::ExcessFb { k: 50, eps: 0.0 }, Some(&rd)).unwrap();
        assert!((e - 50.0 * rd.rate).abs() < 1e-12);
        let avg = energy_expansion(&EnergyExpansion::AvgFb { k: 50 }, Some(&rd)).unwrap();
        assert_eq!(e, avg);
        // Feedback with eps > 0 saves at least the eps fraction.
        let fb =
            energy_expansion(&EnergyExpansion::ExcessFb { k: 50, eps: 0.1 }, Some(&rd)).unwrap();
        assert!(fb <= 0.9 * 50.0 * rd.rate + 1e-12);
    }

    #[test]
    fn bit_kinds() {
        let k = 1000.0f64;
        let q = normal_tail_inv(1e-3).unwrap();
        let e = energy_expansion(&EnergyExpansion::BitsNofb { k: 1000, eps: 1e-3 }, None).unwrap();
        assert!((e - (k * LN_2 + (2.0 * k * LN_2).sqrt() * q - 0.5 * k.ln())).abs() < 1e-9);
        assert_eq!(
            energy_expansion(&EnergyExpansion::BitsFb { k: 10, eps: 0.5 }, None).unwrap(),
            5.0 * LN_2
        );
        assert!(energy_expansion(&EnergyExpansion::AvgFb { k: 10 }, None).is_err());
    }

    #[test]
    fn unknown_kind_rejected() {
        let ok: EnergyExpansion =
            serde_json::from_str(r#"{"kind":"bits_fb","k":8,"eps":0.1}"#).unwrap();
        assert_eq!(ok, EnergyExpansion::BitsFb { k: 8, eps: 0.1 });
        assert!(serde_json::from_str::<EnergyExpansion>(r#"{"kind":"bits_magic","k":8}"#).is_err());
    }
}
