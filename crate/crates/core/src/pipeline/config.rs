use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::gafs::GaConfig;
use crate::neural::TrainConfig;
use crate::segmentation::DEFAULT_SWEEP_STEPS;

/// Everything a run needs, read from TOML. Every key is optional and unknown
/// keys are rejected. The `seed` fields inside `training` and `ga` are
/// overwritten by values derived from the master `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub sweep_steps: usize,
    pub features: FeatureConfig,
    pub training: TrainConfig,
    pub ga: GaConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("mammocad-out"),
            sweep_steps: DEFAULT_SWEEP_STEPS,
            features: FeatureConfig::default(),
            training: TrainConfig::default(),
            ga: GaConfig::default(),
        }
    }
}

fn derive(master: u64, stream: u64) -> u64 {
    crate::gafs::subset_seed(master, &[stream as u16])
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Schema(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
        Self::from_toml(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    /// Sets the master seed and the seeds derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolve_seeds();
        self
    }

    pub fn resolve_seeds(&mut self) {
        self.training.seed = derive(self.seed, 1);
        self.ga.seed = derive(self.seed, 2);
        self.ga.fitness_training.seed = derive(self.seed, 3);
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep_steps < 2 {
            return Err(Error::InvalidInput("sweep_steps must be >= 2".into()));
        }
        self.features.margin.validate()?;
        if self.features.glcm.gray_bins < 2 {
            return Err(Error::InvalidInput("glcm.gray_bins must be >= 2".into()));
        }
        self.ga.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_config() {
        let cfg = RunConfig::from_toml(
            "seed = 7\n[ga]\nl_range = [2, 20]\nfitness_split = \"paper-test\"\n[features.glcm]\ngray_bins = 32\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.ga.l_range, [2, 20]);
        assert_eq!(cfg.features.glcm.gray_bins, 32);
        assert_eq!(cfg.ga.stagnation_window, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert_eq!(RunConfig::from_toml("sed = 1").unwrap_err().code(), "schema");
        assert!(RunConfig::from_toml("[ga]\npopulation = 8").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default().with_seed(42);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
