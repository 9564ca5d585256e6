//! Impulsive-noise generators: Gaussian mixture, Middleton Class A (as a
//! truncated mixture) and LPTV-filtered cyclostationary noise.

use std::path::Path;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sample_circular_gaussian, unit_circular, ComplexVector, SimRng};
use crate::scalar::{Real, C};

/// Zero-mean complex Gaussian mixture: weights `π_k`, total complex
/// variances `γ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureParams {
    pub weights: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GaussianMixtureParams {
    pub fn new(weights: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let p = Self { weights, variances };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.variances.len() {
            return Err(Error::InvalidParameter(format!(
                "mixture needs matching non-empty weights/variances ({} vs {})",
                self.weights.len(),
                self.variances.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("mixture weight < 0".into()));
        }
        if self.variances.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("mixture variance must be > 0".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// `Σ π_k γ_k`
    pub fn second_moment(&self) -> f64 {
        self.weights.iter().zip(&self.variances).map(|(w, v)| w * v).sum()
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }
}

/// Middleton Class A parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiddletonClassAParams {
    /// Overlapping (impulsive) index.
    pub a: f64,
    /// Gaussian-to-impulsive power ratio.
    pub omega: f64,
    /// Number of mixture terms kept.
    pub truncation: usize,
}

impl MiddletonClassAParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(
                "Class A parameters A and Ω must be > 0".into(),
            ));
        }
        if self.truncation == 0 {
            return Err(Error::InvalidParameter("Class A truncation must be >= 1".into()));
        }
        Ok(())
    }
}

/// Truncated Class A as a Gaussian mixture:
/// `π_k ∝ e^{-A} A^k / k!`, `γ_k = (k/A + Ω) / (1 + Ω)`, weights
/// renormalized over the kept terms.
pub fn mca_to_mixture(p: &MiddletonClassAParams) -> Result<GaussianMixtureParams> {
    p.validate()?;
    let mut weights = Vec::with_capacity(p.truncation);
    let mut term = (-p.a).exp();
    for k in 0..p.truncation {
        if k > 0 {
            term *= p.a / k as f64;
        }
        weights.push(term);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let variances = (0..p.truncation)
        .map(|k| (k as f64 / p.a + p.omega) / (1.0 + p.omega))
        .collect();
    Ok(GaussianMixtureParams { weights, variances })
}

/// One stationary segment of the LPTV period, as sample interval
/// `[start, end)` with its shaping filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LptvRegion {
    pub start: usize,
    pub end: usize,
    pub filter: Vec<f64>,
}

/// Linear periodically time-varying noise: white drive `s` filtered by the
/// FIR of whichever region the output sample falls in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LptvNoiseParams {
    pub period: usize,
    pub regions: Vec<LptvRegion>,
    pub drive_variance: f64,
}

impl LptvNoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 || self.regions.is_empty() {
            return Err(Error::InvalidParameter("LPTV needs a period and regions".into()));
        }
        let mut cursor = 0;
        for r in &self.regions {
            if r.start != cursor || r.end <= r.start {
                return Err(Error::InvalidParameter(format!(
                    "LPTV regions must tile [0, {}) in order; bad region [{}, {})",
                    self.period, r.start, r.end
                )));
            }
            if r.filter.is_empty() || r.filter.iter().any(|h| !h.is_finite()) {
                return Err(Error::InvalidParameter("LPTV filter empty or non-finite".into()));
            }
            cursor = r.end;
        }
        if cursor != self.period {
            return Err(Error::InvalidParameter(format!(
                "LPTV regions cover {cursor} of {} samples",
                self.period
            )));
        }
        if !(self.drive_variance > 0.0) {
            return Err(Error::InvalidParameter("LPTV drive variance must be > 0".into()));
        }
        Ok(())
    }

    pub fn max_filter_len(&self) -> usize {
        self.regions.iter().map(|r| r.filter.len()).max().unwrap_or(1)
    }

    /// Region index for a sample position within the period.
    pub fn region_of(&self, pos: usize) -> usize {
        let pos = pos % self.period;
        self.regions
            .iter()
            .position(|r| pos >= r.start && pos < r.end)
            .expect("validated regions tile the period")
    }

    /// Output power of region `i`: `drive_variance · ||h_i||²`.
    pub fn region_power(&self, i: usize) -> f64 {
        self.drive_variance * self.regions[i].filter.iter().map(|h| h * h).sum::<f64>()
    }

    /// Time-averaged output power over one period.
    pub fn mean_power(&self) -> f64 {
        (0..self.regions.len())
            .map(|i| {
                let r = &self.regions[i];
                self.region_power(i) * (r.end - r.start) as f64
            })
            .sum::<f64>()
            / self.period as f64
    }
}

/// LPTV description as stored in config files: region widths are fractions
/// of the period and the period is a multiple of the OFDM symbol length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LptvSpec {
    /// Period length in samples.
    pub period: usize,
    pub drive_variance: f64,
    pub regions: Vec<LptvRegionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LptvRegionSpec {
    pub fraction: f64,
    pub filter: Vec<f64>,
}

impl LptvSpec {
    /// Resolves fractions to sample intervals; the last region absorbs
    /// rounding so the partition is exact.
    pub fn resolve(&self) -> Result<LptvNoiseParams> {
        if self.regions.is_empty() {
            return Err(Error::Config("LPTV spec has no regions".into()));
        }
        let total: f64 = self.regions.iter().map(|r| r.fraction).sum();
        if (total - 1.0).abs() > 1e-9 || self.regions.iter().any(|r| !(r.fraction > 0.0)) {
            return Err(Error::Config(format!(
                "LPTV region fractions must be positive and sum to 1 (got {total})"
            )));
        }
        let mut regions = Vec::with_capacity(self.regions.len());
        let mut start = 0usize;
        let mut acc = 0.0;
        for (i, r) in self.regions.iter().enumerate() {
            acc += r.fraction;
            let end = if i + 1 == self.regions.len() {
                self.period
            } else {
                (acc * self.period as f64).round() as usize
            };
            regions.push(LptvRegion {
                start,
                end,
                filter: r.filter.clone(),
            });
            start = end;
        }
        let p = LptvNoiseParams {
            period: self.period,
            regions,
            drive_variance: self.drive_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Noise scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum NoiseModel {
    Gm(GaussianMixtureParams),
    Mca(MiddletonClassAParams),
    Lptv(LptvSpec),
    Awgn { variance: f64 },
}

impl NoiseModel {
    pub fn tag(&self) -> &'static str {
        match self {
            NoiseModel::Gm(_) => "gm",
            NoiseModel::Mca(_) => "mca",
            NoiseModel::Lptv(_) => "lptv",
            NoiseModel::Awgn { .. } => "awgn",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Gm(p) => p.validate(),
            NoiseModel::Mca(p) => p.validate(),
            NoiseModel::Lptv(s) => s.resolve().map(|_| ()),
            NoiseModel::Awgn { variance } if *variance > 0.0 => Ok(()),
            NoiseModel::Awgn { .. } => Err(Error::InvalidParameter("AWGN variance must be > 0".into())),
        }
    }

    /// Mixture form of the asynchronous models.
    pub fn mixture(&self) -> Result<Option<GaussianMixtureParams>> {
        match self {
            NoiseModel::Gm(p) => Ok(Some(p.clone())),
            NoiseModel::Mca(p) => mca_to_mixture(p).map(Some),
            _ => Ok(None),
        }
    }

    /// `n` raw samples of the model (mixture variances or LPTV powers as
    /// parameterized, no rescaling).
    pub fn sample<T: Real>(&self, rng: &mut SimRng, n: usize, phase: usize) -> Result<ComplexVector<T>> {
        match self {
            NoiseModel::Gm(p) => Ok(sample_gm(rng, p, n)),
            NoiseModel::Mca(p) => Ok(sample_gm(rng, &mca_to_mixture(p)?, n)),
            NoiseModel::Lptv(s) => sample_lptv(rng, &s.resolve()?, n, phase),
            NoiseModel::Awgn { variance } => Ok(sample_circular_gaussian(rng, n, T::of(*variance))),
        }
    }
}

/// Draws `n` i.i.d. component labels from the mixture weights.
pub fn sample_gm_labels(rng: &mut SimRng, p: &GaussianMixtureParams, n: usize) -> Vec<usize> {
    let last = p.weights.len() - 1;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (k, w) in p.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    return k;
                }
            }
            last
        })
        .collect()
}

/// `n` i.i.d. mixture samples: label `k ~ π`, then `CN(0, γ_k)`.
pub fn sample_gm<T: Real>(rng: &mut SimRng, p: &GaussianMixtureParams, n: usize) -> ComplexVector<T> {
    let labels = sample_gm_labels(rng, p, n);
    labels
        .into_iter()
        .map(|k| unit_circular::<T>(rng) * T::of(p.variances[k].sqrt()))
        .collect::<Vec<_>>()
        .into()
}

/// LPTV noise: output sample `k` is the region filter (region chosen by
/// `(k + phase) mod period`) applied to a single continuous white drive.
pub fn sample_lptv<T: Real>(
    rng: &mut SimRng,
    p: &LptvNoiseParams,
    n: usize,
    phase: usize,
) -> Result<ComplexVector<T>> {
    p.validate()?;
    if phase >= p.period {
        return Err(Error::InvalidParameter(format!(
            "LPTV phase {phase} outside [0, {})",
            p.period
        )));
    }
    let history = p.max_filter_len() - 1;
    let drive = sample_circular_gaussian::<T>(rng, n + history, T::of(p.drive_variance));
    let filters: Vec<Vec<T>> = p
        .regions
        .iter()
        .map(|r| r.filter.iter().map(|&h| T::of(h)).collect())
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut region = p.region_of(phase);
    for k in 0..n {
        let pos = (k + phase) % p.period;
        if pos < p.regions[region].start || pos >= p.regions[region].end {
            region = p.region_of(pos);
        }
        let now = k + history;
        let mut acc = C::zero();
        for (tau, &h) in filters[region].iter().enumerate() {
            acc += drive[now - tau] * h;
        }
        out.push(acc);
    }
    Ok(out.into())
}
