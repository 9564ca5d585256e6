//! Monte-Carlo BER harness: experiment configs, per-point simulation,
//! resumable CSV sweeps and SNR-gain measurement.

mod gain;
pub mod selftest;
mod sim;
mod sweep;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fec::ConvCode;
use crate::noise::{GaussianMixtureParams, NoiseModel};
use crate::ofdm::{OfdmConfig, TdiConfig};
use crate::sbl::{FeedbackSettings, PacketLayout, SblSettings};

pub use gain::{qpsk_awgn_ber, snr_gain, snr_at_ber};
pub use sim::{run_point, Simulator};
pub use sweep::{read_csv, run_sweep, write_csv, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Conventional receiver, no cancellation.
    None,
    Nulltone,
    Alltone,
    DecisionFeedback,
    Sequential,
    /// Genie subtraction of the true impulsive component.
    OracleSubtraction,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::None,
        EstimatorKind::Nulltone,
        EstimatorKind::Alltone,
        EstimatorKind::DecisionFeedback,
        EstimatorKind::Sequential,
        EstimatorKind::OracleSubtraction,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            EstimatorKind::None => "none",
            EstimatorKind::Nulltone => "nulltone",
            EstimatorKind::Alltone => "alltone",
            EstimatorKind::DecisionFeedback => "decision_feedback",
            EstimatorKind::Sequential => "sequential",
            EstimatorKind::OracleSubtraction => "oracle_subtraction",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodingConfig {
    pub enabled: bool,
    pub code: ConvCode,
    /// OFDM symbols per codeword.
    pub packet_symbols: usize,
}

impl Default for CodingConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            code: ConvCode::default(),
            packet_symbols: 10,
        }
    }
}

/// One experiment: a fixed scenario and receiver swept over SNR.
///
/// SNR is mean received signal power over the background variance σ²; the
/// impulsive component is scaled relative to σ² and excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub ofdm: OfdmConfig,
    #[serde(default)]
    pub tdi: Option<TdiConfig>,
    pub noise: NoiseModel,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub coding: CodingConfig,
    pub snr_points: Vec<f64>,
    #[serde(default = "default_min_symbols")]
    pub min_symbols: usize,
    #[serde(default = "default_min_bit_errors")]
    pub min_bit_errors: usize,
    /// Symbol cap once `min_bit_errors` has not been reached.
    #[serde(default = "default_max_symbols")]
    pub max_symbols: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Write measured wall time; off gives byte-reproducible CSVs.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// The σ² value is overwritten by the true background level per point.
    #[serde(default)]
    pub sbl: SblSettings,
    #[serde(default)]
    pub feedback: FeedbackSettings,
}

fn default_min_symbols() -> usize {
    100
}

fn default_min_bit_errors() -> usize {
    200
}

fn default_max_symbols() -> usize {
    2000
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Uncoded per-symbol experiment with default settings.
    pub fn new(noise: NoiseModel, estimator: EstimatorKind, snr_points: Vec<f64>) -> Self {
        Self {
            ofdm: OfdmConfig::default(),
            tdi: None,
            noise,
            estimator,
            coding: CodingConfig::default(),
            snr_points,
            min_symbols: default_min_symbols(),
            min_bit_errors: default_min_bit_errors(),
            max_symbols: default_max_symbols(),
            master_seed: 0,
            record_timing: true,
            sbl: SblSettings::default(),
            feedback: FeedbackSettings::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Symbols simulated together: one symbol, one codeword, or one TDI block.
    pub fn trial_symbols(&self) -> usize {
        match (&self.tdi, self.coding.enabled) {
            (Some(t), _) => t.depth,
            (None, true) => self.coding.packet_symbols,
            (None, false) => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.snr_points.is_empty() {
            return cfg_err("snr_points is empty".into());
        }
        if self.snr_points.iter().any(|s| !s.is_finite()) {
            return cfg_err("snr_points must be finite".into());
        }
        if self.min_symbols == 0 {
            return cfg_err("min_symbols must be ≥ 1".into());
        }
        if self.max_symbols < self.min_symbols {
            return cfg_err("max_symbols must be ≥ min_symbols".into());
        }
        self.ofdm.validate().map_err(as_config)?;
        self.noise.validate().map_err(as_config)?;
        self.sbl.validate().map_err(as_config)?;
        self.feedback.validate().map_err(as_config)?;
        if let Some(t) = &self.tdi {
            if t.depth == 0 {
                return cfg_err("tdi.depth must be ≥ 1".into());
            }
            if !self.ofdm.is_flat() {
                return cfg_err("TDI requires a flat channel".into());
            }
        }
        if self.coding.enabled {
            PacketLayout::fill(&self.coding.code, self.ofdm.bits_per_symbol(), self.coding.packet_symbols)
                .map_err(as_config)?;
            if let Some(t) = &self.tdi {
                if t.depth % self.coding.packet_symbols != 0 {
                    return cfg_err(format!(
                        "tdi.depth {} is not a multiple of packet_symbols {}",
                        t.depth, self.coding.packet_symbols
                    ));
                }
            }
        } else if self.estimator == EstimatorKind::DecisionFeedback {
            return cfg_err("decision_feedback needs coding.enabled = true".into());
        }
        Ok(())
    }

    /// Mixture used to split samples into background and impulsive parts.
    pub(crate) fn mixture(&self) -> Result<Option<GaussianMixtureParams>> {
        self.noise.mixture()
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// One simulated SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub estimator: String,
    pub noise: String,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub symbols: u64,
    pub seed: u64,
    pub elapsed_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::GaussianMixtureParams;

    fn gm() -> NoiseModel {
        NoiseModel::Gm(GaussianMixtureParams::new(vec![0.9, 0.1], vec![1.0, 100.0]).unwrap())
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::new(gm(), EstimatorKind::DecisionFeedback, vec![4.0, 8.0]);
        cfg.coding.enabled = true;
        cfg.tdi = Some(TdiConfig::default());
        let txt = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&txt).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let txt = r#"
            estimator = "nulltone"
            snr_points = [10.0]
            [noise]
            model = "awgn"
            variance = 1.0
        "#;
        let cfg = ExperimentConfig::from_toml_str(txt).unwrap();
        assert_eq!(cfg.min_bit_errors, 200);
        assert_eq!(cfg.ofdm, OfdmConfig::default());
        assert!(!cfg.coding.enabled);
        assert_eq!(cfg.trial_symbols(), 1);
    }

    #[test]
    fn validation_errors() {
        let base = ExperimentConfig::new(gm(), EstimatorKind::Nulltone, vec![10.0]);
        assert!(ExperimentConfig { snr_points: vec![], ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { min_symbols: 0, ..base.clone() }.validate().is_err());
        let df = ExperimentConfig { estimator: EstimatorKind::DecisionFeedback, ..base.clone() };
        assert!(matches!(df.validate(), Err(Error::Config(_))));
        let mut tdi = base.clone();
        tdi.coding.enabled = true;
        tdi.coding.packet_symbols = 7;
        tdi.tdi = Some(TdiConfig { depth: 100, seed: 1 });
        assert!(tdi.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("estimator = \"bogus\"").is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn estimator_tags_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(EstimatorKind::from_tag(k.tag()).unwrap(), k);
        }
        assert!(EstimatorKind::from_tag("x").is_err());
    }
}
