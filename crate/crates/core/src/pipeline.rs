//! One subject end to end: notch, optional ICA, window, channel selection,
//! band decomposition and ranking, then the n sweep. Also the ERD/S baseline.

use serde::{Deserialize, Serialize};

use crate::classify::{repeated_stratified_cv, sweep_n, AdaBoost, CvParams, CvReport};
use crate::epochset::EpochSet;
use crate::error::{Error, Result};
use crate::features::{extract_erds_features, ErdsConfig};
use crate::filterbank::{decompose_window, Backend, BandGrid};
use crate::preprocess::{carve_window, ica_clean, notch_filter, PreprocessConfig};
use crate::rng::derive_seed;
use crate::selection::{select, SelectionResult, DEFAULT_N_MAX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub grid: BandGrid,
    pub backend: Backend,
    /// Channels scored for selection; defaults to the preprocessing subset.
    pub candidates: Option<Vec<String>>,
    pub n_max: usize,
    /// Score channels and bands by class separation instead of against the
    /// pooled candidates.
    pub class_aware: bool,
    pub adaboost: AdaBoost,
    pub cv: CvParams,
    pub erds: ErdsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            preprocess: PreprocessConfig::default(),
            grid: BandGrid::default(),
            backend: Backend::default(),
            candidates: None,
            n_max: DEFAULT_N_MAX,
            class_aware: false,
            adaboost: AdaBoost::default(),
            cv: CvParams::default(),
            erds: ErdsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn candidates(&self) -> &[String] {
        self.candidates
            .as_deref()
            .unwrap_or(&self.preprocess.channel_subset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectAnalysis {
    pub subject_id: String,
    pub n_trials: usize,
    pub selection: SelectionResult,
    pub cv: CvReport,
}

impl SubjectAnalysis {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineAnalysis {
    pub subject_id: String,
    pub classes: [String; 2],
    pub feature_names: Vec<String>,
    pub mean: f64,
    pub std: f64,
    pub folds: Vec<f64>,
    pub repeats: usize,
    pub n_folds: usize,
    pub seed: u64,
}

fn two_class_check(set: &EpochSet) -> Result<()> {
    let classes = set.classes();
    if classes.len() != 2 {
        return Err(Error::ClassCount(classes));
    }
    Ok(())
}

/// Notch plus optional ICA, on every channel of `set`.
pub fn clean(set: &EpochSet, cfg: &PipelineConfig, seed: u64) -> Result<EpochSet> {
    let notched = notch_filter(set, &cfg.preprocess)?;
    ica_clean(&notched, &cfg.preprocess, derive_seed(seed, "ica"))
}

/// Full analysis of a two-class set. `seed` drives the CV shuffles and ICA.
pub fn analyze(set: &EpochSet, cfg: &PipelineConfig, seed: u64) -> Result<SubjectAnalysis> {
    two_class_check(set)?;
    let cleaned = clean(set, cfg, seed)?;
    let windowed = carve_window(&cleaned, &cfg.preprocess)?;
    let candidates = cfg.candidates().to_vec();
    let channels = cleaned.select_channels(&cfg.preprocess.channel_subset)?;
    let dec = decompose_window(&channels, &cfg.grid, cfg.backend, cfg.preprocess.analysis_window)?;
    let selection = select(&windowed, &dec, &candidates, cfg.n_max, cfg.class_aware)?;
    let cv = CvParams { seed, ..cfg.cv };
    let report = sweep_n(&dec, &selection, 1..=cfg.n_max, &cfg.adaboost, &cv)?;
    Ok(SubjectAnalysis {
        subject_id: set.subject_id.clone(),
        n_trials: set.n_trials,
        selection,
        cv: report,
    })
}

/// ERD/S features on the configured channels, same CV protocol.
pub fn analyze_baseline(set: &EpochSet, cfg: &PipelineConfig, seed: u64) -> Result<BaselineAnalysis> {
    two_class_check(set)?;
    let cleaned = clean(set, cfg, seed)?;
    let x = extract_erds_features(&cleaned, &cfg.erds, &cfg.preprocess.channel_subset)?;
    let out = repeated_stratified_cv(&x, &cfg.adaboost, &CvParams { seed, ..cfg.cv })?;
    let classes = crate::classify::two_classes(&x.labels)?;
    Ok(BaselineAnalysis {
        subject_id: set.subject_id.clone(),
        classes,
        mean: out.mean(),
        std: out.std(),
        repeats: out.repeats,
        n_folds: out.folds,
        folds: out.accuracies,
        feature_names: x.feature_names,
        seed,
    })
}
