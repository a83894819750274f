use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSelection {
    Pair([String; 2]),
    /// The literal string `"all-pairs"`.
    Keyword(String),
}

impl ClassSelection {
    pub fn is_all_pairs(&self) -> bool {
        matches!(self, ClassSelection::Keyword(k) if k == "all-pairs")
    }

    pub fn pair(&self) -> Option<&[String; 2]> {
        match self {
            ClassSelection::Pair(p) => Some(p),
            ClassSelection::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// EpochSet manifests (or their directories), one per subject session.
    /// Sessions sharing a subject id are concatenated in listed order.
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    /// Master seed; each subject's seed is derived from it and the subject id.
    pub seed: u64,
    /// Two class names, `"all-pairs"`, or absent (data must have two classes).
    pub classes: Option<ClassSelection>,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            output_dir: PathBuf::from("frpc-out"),
            seed: 0,
            classes: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.inputs.is_empty() {
            bail!("no input manifests given");
        }
        for p in &self.inputs {
            if !p.exists() {
                bail!("input manifest not found: {}", p.display());
            }
        }
        if let Some(ClassSelection::Keyword(k)) = &self.classes {
            if k != "all-pairs" {
                bail!("classes must be two names or \"all-pairs\", got {k:?}");
            }
        }
        if let Some(ClassSelection::Pair([a, b])) = &self.classes {
            if a == b {
                bail!("class pair needs two different classes, got {a:?} twice");
            }
        }
        self.pipeline.preprocess.validate()?;
        if self.pipeline.n_max == 0 || self.pipeline.n_max > self.pipeline.grid.bands.len() {
            bail!(
                "n_max {} must be between 1 and the number of bands ({})",
                self.pipeline.n_max,
                self.pipeline.grid.bands.len()
            );
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring where outputs go.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
