use std::path::Path;

use anyhow::{bail, Context, Result};
use c3_core::analysis::{BandMode, DEFAULT_K_RANGE};
use c3_core::autoencoder::ModelConfig;
use c3_core::detector::DetectorConfig;
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "C3_SEED";

/// Everything a run may read from the config file. Every section is
/// optional; missing keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// `seed` is always overwritten by the resolved run seed.
    pub model: ModelConfig,
    pub detector: DetectorConfig,
    pub train: TrainSection,
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Non-crime training documents added to the crime documents.
    pub general_in_training: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub alpha: f64,
    pub band_mode: BandMode,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            band_mode: BandMode::Individual,
            k_min: DEFAULT_K_RANGE.0,
            k_max: DEFAULT_K_RANGE.1,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Flag, then config file, then `C3_SEED`, then 0. The resolved seed is
    /// written back so manifests record it.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let seed = match flag.or(self.seed) {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer"))?,
                Err(_) => 0,
            },
        };
        self.seed = Some(seed);
        self.model.seed = seed;
        Ok(seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.detector.validate()?;
        let a = &self.analysis;
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            bail!("analysis.alpha must lie in (0, 1), got {}", a.alpha);
        }
        if a.k_min < 2 || a.k_min > a.k_max {
            bail!("analysis k range {}..={} is invalid", a.k_min, a.k_max);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str(
            "seed = 4\n[model]\nhidden_size = 16\n[detector]\ntheta = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.model.hidden_size, 16);
        assert_eq!(c.model.latent_dim, ModelConfig::default().latent_dim);
        assert_eq!(c.detector.theta, 0.5);
        assert_eq!(c.detector.min_word_len, 2);
        assert_eq!(c.analysis, AnalysisSection::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("bogus = 1\n").is_err());
    }

    #[test]
    fn flag_beats_file() {
        let mut c = RunConfig {
            seed: Some(3),
            ..RunConfig::default()
        };
        assert_eq!(c.resolve_seed(Some(9)).unwrap(), 9);
        assert_eq!(c.model.seed, 9);
        let mut c = RunConfig {
            seed: Some(3),
            ..RunConfig::default()
        };
        assert_eq!(c.resolve_seed(None).unwrap(), 3);
    }
}
