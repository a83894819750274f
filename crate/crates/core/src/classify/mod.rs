//! Discrete AdaBoost on decision stumps, repeated stratified cross-validation,
//! and the sweep over the number of top-ranked bands.

mod adaboost;
mod cv;
mod sweep;

pub use adaboost::{
    best_stump, predict, train_adaboost, train_adaboost_traced, AdaBoost, RoundTrace, Stump,
    StumpEnsemble, EPS_CLAMP,
};
pub use cv::{
    fold_assignment, repeated_stratified_cv, CvOutcome, CvParams, Learner, MajorityClass,
};
pub use sweep::{best_n, sweep_n, CvReport, NResult, OPTIMISM_NOTE};

/// Two sorted class names, or an error naming what was found.
pub fn two_classes(labels: &[String]) -> crate::Result<[String; 2]> {
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    match <[String; 2]>::try_from(classes) {
        Ok(pair) => Ok(pair),
        Err(found) => Err(crate::Error::ClassCount(found)),
    }
}
