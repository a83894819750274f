use serde::{Deserialize, Serialize};

use super::adaboost::AdaBoost;
use super::cv::{repeated_stratified_cv, CvParams};
use super::two_classes;
use crate::error::{Error, Result};
use crate::features::extract_frpc_features;
use crate::filterbank::{BandDecomposition, BandSpec};
use crate::selection::SelectionResult;

pub const OPTIMISM_NOTE: &str =
    "best_n is chosen on the same cross-validation that reports its accuracy (no nested CV); \
     the best-n accuracy is optimistically biased";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NResult {
    pub n: usize,
    pub bands: Vec<BandSpec>,
    pub mean: f64,
    pub std: f64,
    pub folds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub classes: [String; 2],
    pub selected_channel: String,
    pub per_n: Vec<NResult>,
    pub best_n: usize,
    pub seed: u64,
    pub repeats: usize,
    pub folds: usize,
    pub folds_requested: usize,
    pub rounds: usize,
    pub note: String,
}

impl CvReport {
    pub fn best(&self) -> &NResult {
        self.per_n
            .iter()
            .find(|r| r.n == self.best_n)
            .expect("best_n is one of per_n")
    }
}

/// Means closer than this count as tied (summation order alone can move a
/// mean of identical fold values by a few ulps).
pub const MEAN_TIE_TOL: f64 = 1e-9;

/// The n with the highest mean accuracy; ties go to the smaller n.
pub fn best_n(per_n: &[NResult]) -> Option<usize> {
    per_n
        .iter()
        .fold(None::<&NResult>, |best, r| match best {
            Some(b) if r.mean <= b.mean + MEAN_TIE_TOL => Some(b),
            _ => Some(r),
        })
        .map(|r| r.n)
}

/// Cross-validate the top-n band groups of `selection` on `dec`. Every n
/// uses the same folds.
pub fn sweep_n(
    dec: &BandDecomposition,
    selection: &SelectionResult,
    n_range: std::ops::RangeInclusive<usize>,
    booster: &AdaBoost,
    cv: &CvParams,
) -> Result<CvReport> {
    let classes = two_classes(&dec.labels)?;
    let mut per_n = Vec::new();
    let (mut folds, mut repeats) = (cv.folds, cv.repeats);
    for n in n_range {
        let bands = selection
            .groups
            .get(&n)
            .ok_or_else(|| Error::InvalidInput(format!("selection has no group for n = {n}")))?;
        let x = extract_frpc_features(dec, &selection.selected_channel, bands)?;
        let out = repeated_stratified_cv(&x, booster, cv)?;
        (folds, repeats) = (out.folds, out.repeats);
        per_n.push(NResult {
            n,
            bands: bands.clone(),
            mean: out.mean(),
            std: out.std(),
            folds: out.accuracies,
        });
    }
    let best_n = best_n(&per_n).ok_or_else(|| Error::InvalidInput("empty n range".into()))?;
    Ok(CvReport {
        classes,
        selected_channel: selection.selected_channel.clone(),
        per_n,
        best_n,
        seed: cv.seed,
        repeats,
        folds,
        folds_requested: cv.folds,
        rounds: booster.rounds,
        note: OPTIMISM_NOTE.into(),
    })
}
