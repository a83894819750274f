use serde::{Deserialize, Serialize};

use super::two_classes;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Round errors are clamped to `[EPS_CLAMP, 1 - EPS_CLAMP]` before computing alpha.
pub const EPS_CLAMP: f64 = 1e-10;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    pub threshold: f64,
    /// +1 votes +1 above the threshold, -1 votes -1 above it.
    pub polarity: i8,
    pub alpha: f64,
}

impl Stump {
    pub fn vote(&self, row: &[f64]) -> f64 {
        let p = f64::from(self.polarity);
        if row[self.feature_index] > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub stumps: Vec<Stump>,
    /// `classes[0]` maps to -1, `classes[1]` to +1.
    pub classes: [String; 2],
    pub n_features: usize,
}

impl StumpEnsemble {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.alpha * s.vote(row)).sum()
    }

    /// Zero scores go to the +1 class.
    pub fn predict_row(&self, row: &[f64]) -> &str {
        if self.score(row) >= 0.0 {
            &self.classes[1]
        } else {
            &self.classes[0]
        }
    }
}

/// What happened in one boosting round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub epsilon: f64,
    pub epsilon_clamped: f64,
    pub alpha: f64,
    /// Normalizer `sum_i w_i exp(-alpha y_i h_i)` before renormalization.
    pub z: f64,
    pub weight_sum: f64,
    pub weight_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoost {
    pub rounds: usize,
}

impl Default for AdaBoost {
    fn default() -> Self {
        AdaBoost { rounds: 100 }
    }
}

/// Lowest weighted-error stump over every feature, midpoint threshold and
/// polarity. `y` is ±1. Earlier features, lower thresholds and polarity +1
/// win ties. Returns the stump (alpha 0) and its error.
pub fn best_stump(x: &FeatureMatrix, y: &[f64], w: &[f64]) -> Option<(Stump, f64)> {
    let order = sorted_columns(x);
    best_stump_sorted(x, &order, y, w)
}

fn sorted_columns(x: &FeatureMatrix) -> Vec<Vec<usize>> {
    (0..x.n_cols)
        .map(|j| {
            let mut idx: Vec<usize> = (0..x.n_rows).collect();
            idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
            idx
        })
        .collect()
}

fn best_stump_sorted(
    x: &FeatureMatrix,
    order: &[Vec<usize>],
    y: &[f64],
    w: &[f64],
) -> Option<(Stump, f64)> {
    let n = x.n_rows;
    let mut best: Option<(Stump, f64)> = None;
    // suffix sums are built separately so an empty side is exactly zero
    let mut pos_above = vec![0.0; n + 1];
    let mut neg_above = vec![0.0; n + 1];
    for (j, idx) in order.iter().enumerate() {
        for k in (0..n).rev() {
            let i = idx[k];
            let (p, q) = if y[i] > 0.0 { (w[i], 0.0) } else { (0.0, w[i]) };
            pos_above[k] = pos_above[k + 1] + p;
            neg_above[k] = neg_above[k + 1] + q;
        }
        let (mut pos_below, mut neg_below) = (0.0, 0.0);
        for k in 0..n.saturating_sub(1) {
            let i = idx[k];
            if y[i] > 0.0 {
                pos_below += w[i];
            } else {
                neg_below += w[i];
            }
            let (lo, hi) = (x.get(i, j), x.get(idx[k + 1], j));
            if lo == hi {
                continue;
            }
            let threshold = lo + (hi - lo) / 2.0;
            let candidates = [
                (1i8, pos_below + neg_above[k + 1]),
                (-1i8, neg_below + pos_above[k + 1]),
            ];
            for (polarity, err) in candidates {
                if best.as_ref().map_or(true, |(_, e)| err < e - TIE_TOL) {
                    best = Some((
                        Stump {
                            feature_index: j,
                            threshold,
                            polarity,
                            alpha: 0.0,
                        },
                        err,
                    ));
                }
            }
        }
    }
    best
}

pub fn train_adaboost(x: &FeatureMatrix, rounds: usize) -> Result<StumpEnsemble> {
    train_adaboost_traced(x, rounds).map(|(m, _)| m)
}

/// Train and also return one trace entry per accepted round.
pub fn train_adaboost_traced(
    x: &FeatureMatrix,
    rounds: usize,
) -> Result<(StumpEnsemble, Vec<RoundTrace>)> {
    let classes = two_classes(&x.labels)?;
    if x.n_rows < 4 {
        return Err(Error::TooFewTrials {
            class: "any".into(),
            count: x.n_rows,
            needed: 4,
        });
    }
    if rounds == 0 {
        return Err(Error::InvalidInput("rounds must be >= 1".into()));
    }
    let distinct = (1..x.n_rows).any(|i| x.row(i) != x.row(0));
    if !distinct {
        return Err(Error::DegenerateFeatures);
    }
    let y: Vec<f64> = x
        .labels
        .iter()
        .map(|l| if *l == classes[1] { 1.0 } else { -1.0 })
        .collect();
    let n = x.n_rows;
    let mut w = vec![1.0 / n as f64; n];
    let order = sorted_columns(x);
    let mut stumps = Vec::new();
    let mut trace = Vec::new();

    for _ in 0..rounds {
        let Some((mut stump, eps)) = best_stump_sorted(x, &order, &y, &w) else {
            break;
        };
        if eps >= 0.5 {
            break;
        }
        let c = eps.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        stump.alpha = 0.5 * ((1.0 - c) / c).ln();
        let mut z = 0.0;
        for i in 0..n {
            w[i] *= (-stump.alpha * y[i] * stump.vote(x.row(i))).exp();
            z += w[i];
        }
        for v in &mut w {
            *v /= z;
        }
        stumps.push(stump);
        trace.push(RoundTrace {
            epsilon: eps,
            epsilon_clamped: c,
            alpha: stump.alpha,
            z,
            weight_sum: w.iter().sum(),
            weight_min: w.iter().copied().fold(f64::INFINITY, f64::min),
        });
        if eps == 0.0 {
            break;
        }
    }
    if stumps.is_empty() {
        return Err(Error::NoWeakLearner);
    }
    Ok((
        StumpEnsemble {
            stumps,
            classes,
            n_features: x.n_cols,
        },
        trace,
    ))
}

pub fn predict(model: &StumpEnsemble, x: &FeatureMatrix) -> Result<Vec<String>> {
    if model.stumps.is_empty() {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    if x.n_cols != model.n_features {
        return Err(Error::FeatureMismatch {
            expected: model.n_features,
            actual: x.n_cols,
        });
    }
    Ok((0..x.n_rows)
        .map(|i| model.predict_row(x.row(i)).to_string())
        .collect())
}
