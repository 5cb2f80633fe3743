//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attributes::AttributeParams;
use crate::detector::{FoldSpec, LabelingPolicy};
use crate::evaluation::default_r_grid;
use crate::forest::{ForestParams, SamplingMode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub mesh_dir: PathBuf,
    pub clicks_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            mesh_dir: "meshes".into(),
            clicks_dir: "clicks".into(),
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributeSection {
    pub delta_fraction: f64,
    pub neighbors: usize,
}

impl Default for AttributeSection {
    fn default() -> Self {
        let p = AttributeParams::default();
        AttributeSection {
            delta_fraction: p.delta_fraction,
            neighbors: p.neighbors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub trees: usize,
    /// Attributes drawn per node; 0 means ⌊√43⌋.
    pub features_per_node: usize,
    pub sampling: SamplingMode,
    pub seed: u64,
}

impl Default for ForestSection {
    fn default() -> Self {
        ForestSection {
            trees: 100,
            features_per_node: 5,
            sampling: SamplingMode::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundTruthSection {
    pub sigmas: Vec<f64>,
    pub ns: Vec<usize>,
}

impl Default for GroundTruthSection {
    fn default() -> Self {
        GroundTruthSection {
            sigmas: vec![0.03, 0.05],
            ns: (2..=10).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    /// NMS radius multiplier on ψ.
    pub c: f64,
    pub labels: LabelingPolicy,
    pub folds: FoldSpec,
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            c: 2.0,
            labels: LabelingPolicy {
                sigmas: vec![0.03, 0.05],
                n_min: 2,
                n_max: 10,
            },
            folds: FoldSpec::Random { count: 3, seed: 0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub r: Vec<f64>,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            r: default_r_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub attributes: AttributeSection,
    pub forest: ForestSection,
    pub ground_truth: GroundTruthSection,
    pub detection: DetectionSection,
    pub evaluation: EvaluationSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.paths.rebase(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the serialized settings. Paths are left out, so the same
    /// run in another directory hashes the same.
    pub fn hash(&self) -> Result<String> {
        let mut settings = self.clone();
        settings.paths = Paths::default();
        Ok(hex::encode(Sha256::digest(settings.to_toml()?.as_bytes())))
    }

    /// Applies `--seed`: the forest seed and the seed of a random fold split.
    pub fn override_seed(&mut self, seed: u64) {
        self.forest.seed = seed;
        if let FoldSpec::Random { seed: s, .. } = &mut self.detection.folds {
            *s = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.attributes.delta_fraction > 0.0) {
            return bad(format!(
                "attributes.delta_fraction must be positive, got {}",
                self.attributes.delta_fraction
            ));
        }
        if self.attributes.neighbors == 0 {
            return bad("attributes.neighbors must be at least 1".into());
        }
        if self.forest.trees == 0 {
            return bad("forest.trees must be at least 1".into());
        }
        if let SamplingMode::Balanced { ratio } = self.forest.sampling {
            if !(ratio > 0.0) {
                return bad(format!(
                    "forest.sampling.ratio must be positive, got {ratio}"
                ));
            }
        }
        let gt = &self.ground_truth;
        if gt.sigmas.is_empty() || gt.ns.is_empty() {
            return bad("ground_truth.sigmas and ground_truth.ns must be nonempty".into());
        }
        if let Some(s) = gt.sigmas.iter().find(|s| !(**s > 0.0 && **s <= 0.1)) {
            return bad(format!("ground_truth sigma {s} outside (0, 0.1]"));
        }
        if gt.ns.contains(&0) {
            return bad("ground_truth.ns must be at least 1".into());
        }
        if !(self.detection.c > 0.0) {
            return bad(format!(
                "detection.c must be positive, got {}",
                self.detection.c
            ));
        }
        self.detection
            .labels
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let r = &self.evaluation.r;
        if r.is_empty() || r.iter().any(|x| !(*x >= 0.0)) || r.windows(2).any(|w| w[0] >= w[1]) {
            return bad("evaluation.r must be nonempty, nonnegative and strictly ascending".into());
        }
        Ok(())
    }

    pub fn attribute_params(&self) -> AttributeParams {
        AttributeParams {
            neighbors: self.attributes.neighbors,
            delta_fraction: self.attributes.delta_fraction,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            trees: self.forest.trees,
            features_per_node: (self.forest.features_per_node > 0)
                .then_some(self.forest.features_per_node),
            sampling: self.forest.sampling,
            seed: self.forest.seed,
        }
    }

    /// All (σ, n) ground-truth cells in grid order.
    pub fn cells(&self) -> Vec<(f64, usize)> {
        let gt = &self.ground_truth;
        gt.sigmas
            .iter()
            .flat_map(|&s| gt.ns.iter().map(move |&n| (s, n)))
            .collect()
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.mesh_dir,
            &mut self.clicks_dir,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}
