// SPDX-License-Identifier: MIT OR Apache-2.0

//! TOML experiment configuration.
//!
//! Every section is optional. Nested `seed` fields are overwritten on
//! resolution by `derive_seed(seed, <stage>)`, so a run is a function of
//! the root seed and the remaining settings only.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distill::ProbeTrainConfig;
use crate::error::{CvError, Result};
use crate::oracle::WorldSpec;
use crate::scene::{
    DistillationParams, HueSweepParams, ProbeCorpusParams, SimilarityParams, VisualSearchParams,
};
use crate::seed::derive_seed;
use crate::steering::{ColorSwapConfig, TripleConfig};
use crate::store::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringStage {
    pub enabled: bool,
    /// Valid triples evaluated, in enumeration order; 0 means all.
    pub max_triples: usize,
    pub triples: TripleConfig,
    pub color_swap: ColorSwapConfig,
}

impl Default for SteeringStage {
    fn default() -> Self {
        Self {
            enabled: true,
            max_triples: 0,
            triples: TripleConfig::default(),
            color_swap: ColorSwapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryStage {
    pub enabled: bool,
    pub hue_sweep: HueSweepParams,
    pub pca_components: usize,
}

impl Default for GeometryStage {
    fn default() -> Self {
        Self {
            enabled: true,
            hue_sweep: HueSweepParams::default(),
            pca_components: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisualSearchStage {
    pub enabled: bool,
    pub bins: usize,
    pub min_per_bin: usize,
    pub generator: VisualSearchParams,
    /// World used for this stage; `None` reuses the main world.
    pub world: Option<WorldSpec>,
}

impl Default for VisualSearchStage {
    fn default() -> Self {
        Self {
            enabled: true,
            bins: crate::bench::DEFAULT_BINS,
            min_per_bin: crate::bench::DEFAULT_MIN_PER_BIN,
            generator: VisualSearchParams::default(),
            world: Some(WorldSpec::crowded(0, 0.6, 0.5)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityStage {
    pub enabled: bool,
    pub generator: SimilarityParams,
}

impl Default for SimilarityStage {
    fn default() -> Self {
        Self {
            enabled: true,
            generator: SimilarityParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub method: Method,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub world: WorldSpec,
    pub distill: DistillationParams,
    pub probe_corpus: ProbeCorpusParams,
    pub probe: ProbeTrainConfig,
    pub steering: SteeringStage,
    pub geometry: GeometryStage,
    pub visual_search: VisualSearchStage,
    pub similarity: SimilarityStage,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            method: Method::Centroid,
            threads: 0,
            world: WorldSpec::default(),
            distill: DistillationParams::default(),
            probe_corpus: ProbeCorpusParams::default(),
            probe: ProbeTrainConfig::default(),
            steering: SteeringStage::default(),
            geometry: GeometryStage::default(),
            visual_search: VisualSearchStage::default(),
            similarity: SimilarityStage::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CvError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CvError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CvError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CvError::Config(e.to_string()))
    }

    /// Seed for stage `name`.
    pub fn stage_seed(&self, name: &str) -> u64 {
        derive_seed(self.seed, name)
    }

    /// Copy with every nested seed derived from the root seed.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.world.seed = self.stage_seed("world");
        c.probe.seed = self.stage_seed("probe");
        c.steering.triples.seed = self.stage_seed("steer-triples");
        if let Some(w) = c.visual_search.world.as_mut() {
            w.seed = self.stage_seed("visual-search-world");
        }
        c
    }

    pub fn check(&self) -> Result<()> {
        if self.method == Method::GroundTruth {
            return Err(CvError::Config(
                "method must be probe, pca_probe or centroid".into(),
            ));
        }
        self.probe.check()?;
        if self.visual_search.bins == 0 {
            return Err(CvError::Config(
                "visual_search.bins must be positive".into(),
            ));
        }
        let n = self.distill.colors.len() * self.distill.shapes.len();
        if self.geometry.pca_components == 0
            || self.geometry.pca_components >= self.geometry.hue_sweep.count.min(n)
        {
            return Err(CvError::Config(format!(
                "geometry.pca_components must lie in [1, {})",
                self.geometry.hue_sweep.count.min(n)
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(
            ExperimentConfig::from_toml("").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn round_trip_and_overrides() {
        let c = ExperimentConfig::from_toml(
            "seed = 9\nmethod = \"probe\"\n[world]\nnoise_sigma = 0.1\n[steering]\nmax_triples = 5\n",
        )
        .unwrap();
        assert_eq!(
            (
                c.seed,
                c.method,
                c.world.noise_sigma,
                c.steering.max_triples
            ),
            (9, Method::Probe, 0.1, 5)
        );
        let r = c.resolved();
        assert_eq!(
            ExperimentConfig::from_toml(&r.to_toml().unwrap()).unwrap(),
            r
        );
        assert_eq!(r.world.seed, derive_seed(9, "world"));
        r.check().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("sed = 1").is_err());
        assert!(ExperimentConfig::from_toml("[world]\ngain = 2").is_err());
        assert!(ExperimentConfig::from_toml("method = \"ground_truth\"")
            .unwrap()
            .check()
            .is_err());
    }
}
