//! Run configuration: one JSON document holding every stage's settings.

use std::path::{Path, PathBuf};

use evimpact_core::degrade::DegradeConfig;
use evimpact_core::eval::Thresholds;
use evimpact_core::events::AccumConfig;
use evimpact_core::loss::LossWeights;
use evimpact_core::refine::RefinerConfig;
use evimpact_core::scene::SceneConfig;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formats::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub clips: usize,
    /// Maximum clips processed concurrently.
    pub parallelism: usize,
    pub scenario: String,
    /// Draw a different swing per clip around `scene`; otherwise every clip
    /// reuses `scene` with its own noise seed.
    pub vary_swing: bool,
    /// Skip degradation and write the ground truth as coarse masks.
    pub clean_masks: bool,
    pub accum: AccumConfig,
    pub scene: SceneConfig,
    pub degrade: DegradeConfig,
    pub refiner: RefinerConfig,
    pub loss: LossWeights,
    pub thresholds: Thresholds,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            seed: 0,
            clips: 1,
            parallelism: 1,
            scenario: "synthetic".into(),
            vary_swing: true,
            clean_masks: false,
            accum: AccumConfig::default(),
            scene: SceneConfig::default(),
            degrade: DegradeConfig::default(),
            refiner: RefinerConfig::default(),
            loss: LossWeights::default(),
            thresholds: Thresholds::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        use evimpact_core::Error;
        if self.parallelism == 0 {
            return Err(Error::InvalidConfig {
                field: "parallelism",
                reason: "must be >= 1".into(),
            }
            .into());
        }
        self.accum.validate()?;
        self.scene.validate()?;
        self.degrade.validate(self.scene.width as usize, self.scene.height as usize)?;
        self.refiner.validate()?;
        self.loss.validate()?;
        self.thresholds.validate()?;
        Ok(())
    }

    /// Seed of clip `i`.
    pub fn clip_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}
