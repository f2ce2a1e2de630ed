use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::Pmf;

/// A memoryless source together with its per-letter distortion measure.
///
/// Block distortion is always the per-letter average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceModel {
    Discrete {
        pmf: Pmf,
        /// `distortion[s][z]`; entries may be `+inf`.
        #[serde(with = "inf_matrix")]
        distortion: Vec<Vec<f64>>,
    },
    /// Zero-mean Gaussian under squared error.
    Gaussian { variance: f64 },
}

impl SourceModel {
    pub fn discrete(pmf: Pmf, distortion: Vec<Vec<f64>>) -> Result<Self> {
        let src = SourceModel::Discrete { pmf, distortion };
        src.validate()?;
        Ok(src)
    }

    /// Hamming distortion on the source alphabet itself.
    pub fn hamming(pmf: Pmf) -> Self {
        let n = pmf.len();
        let distortion = (0..n)
            .map(|s| (0..n).map(|z| if s == z { 0.0 } else { 1.0 }).collect())
            .collect();
        SourceModel::Discrete { pmf, distortion }
    }

    pub fn binary_hamming(p: f64) -> Result<Self> {
        Ok(Self::hamming(Pmf::bernoulli(p)?))
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        let src = SourceModel::Gaussian { variance };
        src.validate()?;
        Ok(src)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceModel::Discrete { pmf, distortion } => {
                if distortion.len() != pmf.len() {
                    return Err(Error::Config {
                        path: "source.distortion".into(),
                        message: format!(
                            "{} rows for an alphabet of {}",
                            distortion.len(),
                            pmf.len()
                        ),
                    });
                }
                let n_z = distortion.first().map_or(0, Vec::len);
                if n_z == 0 || distortion.iter().any(|r| r.len() != n_z) {
                    return Err(Error::Config {
                        path: "source.distortion".into(),
                        message: "rows must be non-empty and of equal length".into(),
                    });
                }
                if distortion
                    .iter()
                    .flatten()
                    .any(|&x| x.is_nan() || x < 0.0 || x == f64::NEG_INFINITY)
                {
                    return Err(Error::Config {
                        path: "source.distortion".into(),
                        message: "entries must be non-negative or +inf".into(),
                    });
                }
                for (s, row) in distortion.iter().enumerate() {
                    if pmf.get(s) > 0.0 && row.iter().all(|x| x.is_infinite()) {
                        return Err(Error::Config {
                            path: "source.distortion".into(),
                            message: format!("symbol {s} has no finite reproduction"),
                        });
                    }
                }
                Ok(())
            }
            SourceModel::Gaussian { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::Config {
                        path: "source.variance".into(),
                        message: format!("variance must be positive, got {variance}"),
                    });
                }
                Ok(())
            }
        }
    }

    /// True when some entry of the distortion matrix is unbounded.
    pub fn has_unbounded_distortion(&self) -> bool {
        match self {
            SourceModel::Discrete { distortion, .. } => {
                distortion.iter().flatten().any(|x| x.is_infinite())
            }
            SourceModel::Gaussian { .. } => true,
        }
    }

    pub fn pmf(&self) -> Option<&Pmf> {
        match self {
            SourceModel::Discrete { pmf, .. } => Some(pmf),
            SourceModel::Gaussian { .. } => None,
        }
    }

    pub fn distortion_matrix(&self) -> Option<&[Vec<f64>]> {
        match self {
            SourceModel::Discrete { distortion, .. } => Some(distortion),
            SourceModel::Gaussian { .. } => None,
        }
    }

    pub fn n_reproductions(&self) -> usize {
        match self {
            SourceModel::Discrete { distortion, .. } => distortion[0].len(),
            SourceModel::Gaussian { .. } => 0,
        }
    }

    /// Largest finite distortion entry; `None` for unbounded measures.
    pub fn max_distortion(&self) -> Option<f64> {
        match self {
            SourceModel::Discrete { distortion, .. } if !self.has_unbounded_distortion() => {
                Some(distortion.iter().flatten().copied().fold(0.0, f64::max))
            }
            _ => None,
        }
    }
}

/// `(d_min, d_max)` bracketing the distortion levels with a non-trivial rate.
pub fn d_min_max(src: &SourceModel) -> (f64, f64) {
    match src {
        SourceModel::Gaussian { variance } => (0.0, *variance),
        SourceModel::Discrete { pmf, distortion } => {
            let n_z = distortion[0].len();
            let d_max = (0..n_z)
                .map(|z| expected_column(pmf, distortion, z))
                .fold(f64::INFINITY, f64::min);
            let d_min = pmf
                .probs()
                .iter()
                .zip(distortion)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, row)| p * row.iter().copied().fold(f64::INFINITY, f64::min))
                .sum();
            (d_min, d_max)
        }
    }
}

fn expected_column(pmf: &Pmf, distortion: &[Vec<f64>], z: usize) -> f64 {
    pmf.probs()
        .iter()
        .zip(distortion)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, row)| p * row[z])
        .sum()
}

/// Serializes `+inf` entries as the string `"inf"` so matrices survive JSON.
pub(crate) mod inf_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Entry>> = m
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| {
                        if x.is_infinite() {
                            Entry::Text("inf".into())
                        } else {
                            Entry::Num(x)
                        }
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<Entry>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|e| match e {
                        Entry::Num(x) => Ok(x),
                        Entry::Text(t) if t.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
                        Entry::Text(t) => Err(serde::de::Error::custom(format!(
                            "bad distortion entry `{t}`"
                        ))),
                    })
                    .collect()
            })
            .collect()
    }
}
