use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adaboost::{predict, train_adaboost, AdaBoost};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvParams {
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvParams {
    fn default() -> Self {
        CvParams {
            repeats: 10,
            folds: 10,
            seed: 0,
        }
    }
}

/// Anything that can be trained on one fold and asked about another.
pub trait Learner: Sync {
    fn fit_predict(&self, train: &FeatureMatrix, test: &FeatureMatrix) -> Result<Vec<String>>;
}

impl Learner for AdaBoost {
    fn fit_predict(&self, train: &FeatureMatrix, test: &FeatureMatrix) -> Result<Vec<String>> {
        predict(&train_adaboost(train, self.rounds)?, test)
    }
}

/// Predicts the most frequent training label (ties to the first in sort order).
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityClass;

impl Learner for MajorityClass {
    fn fit_predict(&self, train: &FeatureMatrix, test: &FeatureMatrix) -> Result<Vec<String>> {
        let mut counts = std::collections::BTreeMap::<&str, usize>::new();
        for l in &train.labels {
            *counts.entry(l).or_default() += 1;
        }
        let top = counts
            .iter()
            .fold(None::<(&str, usize)>, |best, (&c, &n)| match best {
                Some((_, m)) if m >= n => best,
                _ => Some((c, n)),
            })
            .ok_or_else(|| Error::InvalidInput("empty training fold".into()))?;
        Ok(vec![top.0.to_string(); test.n_rows])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    /// `repeats * folds` accuracies in percent, repeat-major.
    pub accuracies: Vec<f64>,
    pub repeats: usize,
    pub folds: usize,
    pub folds_requested: usize,
}

impl CvOutcome {
    pub fn mean(&self) -> f64 {
        crate::dsp::mean(&self.accuracies)
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        crate::dsp::variance(&self.accuracies).sqrt()
    }
}

/// Stratified fold index for every row: each class (in sorted order) is
/// shuffled and dealt round-robin, continuing the fold counter across classes.
pub fn fold_assignment(labels: &[String], folds: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    let mut fold = vec![0; labels.len()];
    let mut counter = 0;
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == *c).collect();
        idx.shuffle(rng);
        for i in idx {
            fold[i] = counter % folds;
            counter += 1;
        }
    }
    fold
}

/// `repeats x folds` stratified cross-validation. Folds shrink to the
/// smallest class count when needed. All shuffles are drawn before any
/// training, so the thread count cannot change the result.
pub fn repeated_stratified_cv(
    x: &FeatureMatrix,
    learner: &impl Learner,
    params: &CvParams,
) -> Result<CvOutcome> {
    if params.repeats == 0 || params.folds < 2 {
        return Err(Error::Config(format!(
            "cv needs repeats >= 1 and folds >= 2, got {} x {}",
            params.repeats, params.folds
        )));
    }
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for l in &x.labels {
        *counts.entry(l).or_default() += 1;
    }
    if let Some((c, &n)) = counts.iter().find(|(_, &n)| n < 2) {
        return Err(Error::TooFewTrials {
            class: c.to_string(),
            count: n,
            needed: 2,
        });
    }
    let min_count = counts.values().copied().min().unwrap_or(0);
    let folds = params.folds.min(min_count);
    if folds < params.folds {
        warn!("reducing folds from {} to {folds} (smallest class)", params.folds);
    }

    let plans: Vec<Vec<usize>> = (0..params.repeats)
        .map(|r| fold_assignment(&x.labels, folds, &mut rng::stream(params.seed, r as u64)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..params.repeats)
        .flat_map(|r| (0..folds).map(move |f| (r, f)))
        .collect();
    let accuracies = jobs
        .par_iter()
        .map(|&(r, f)| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..x.n_rows).partition(|&i| plans[r][i] == f);
            let test_x = x.subset(&test);
            let pred = learner.fit_predict(&x.subset(&train), &test_x)?;
            let hits = pred.iter().zip(&test_x.labels).filter(|(p, l)| p == l).count();
            Ok(100.0 * hits as f64 / test.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvOutcome {
        accuracies,
        repeats: params.repeats,
        folds,
        folds_requested: params.folds,
    })
}
