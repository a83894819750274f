//! Channel selection and band ranking.
//!
//! Both steps score a per-trial feature with the same quotient
//!
//! ```text
//! (mean_own - mean_pooled)^2 / (var_own + var_pooled)
//! ```
//!
//! where "own" is one channel's per-trial values and "pooled" is the values of
//! every candidate channel stacked together. For channels the feature is the
//! log-variance of the windowed trial; for bands it is the log-variance of the
//! band-filtered trial on the selected channel, pooled band-wise over all
//! candidates. Labels are not used unless the class-aware variant is asked for.
//! All variances are population (1/N) variances.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::epochset::EpochSet;
use crate::error::{Error, Result};
use crate::filterbank::{band_signal, BandDecomposition, BandSpec};

pub const DEFAULT_N_MAX: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub channel: String,
    pub mu_i: f64,
    pub sigma_i: f64,
    pub mu_all: f64,
    pub sigma_all: f64,
    pub fr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandScore {
    pub band: BandSpec,
    pub mu_i: f64,
    pub sigma_i: f64,
    pub mu_all: f64,
    pub sigma_all: f64,
    pub pr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedBands {
    pub ranked: Vec<BandSpec>,
    /// `n -> first n entries of ranked`, for `n = 1..=n_max`.
    pub groups: BTreeMap<usize, Vec<BandSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub channel_scores: Vec<ChannelScore>,
    pub selected_channel: String,
    pub band_scores: Vec<BandScore>,
    pub ranked_bands: Vec<BandSpec>,
    pub groups: BTreeMap<usize, Vec<BandSpec>>,
}

/// Mean, std and quotient for one score. Zero denominator scores 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quotient {
    pub mu_i: f64,
    pub sigma_i: f64,
    pub mu_all: f64,
    pub sigma_all: f64,
    pub value: f64,
}

pub fn fisher_quotient(own: &[f64], pooled: &[f64]) -> Quotient {
    let var_i = dsp::variance(own);
    let var_all = dsp::variance(pooled);
    Quotient {
        mu_i: dsp::mean(own),
        sigma_i: var_i.sqrt(),
        mu_all: dsp::mean(pooled),
        sigma_all: var_all.sqrt(),
        value: quotient_value(own, pooled),
    }
}

// The quotient as one fraction of shifted sums:
//   D = S_i·N_a − S_a·N_i
//   value = D² / (N_a²·(N_i·Q_i − S_i²) + N_i²·(N_a·Q_a − S_a²))
// with S, Q the sum and sum of squares after subtracting a common reference.
// No rounded mean enters, so small rational inputs come out exact.
fn quotient_value(own: &[f64], pooled: &[f64]) -> f64 {
    if own.is_empty() || pooled.is_empty() {
        return 0.0;
    }
    let reference = pooled[0];
    let sums = |x: &[f64]| {
        x.iter().fold((0.0, 0.0), |(s, q), v| {
            let d = v - reference;
            (s + d, q + d * d)
        })
    };
    let (s_i, q_i) = sums(own);
    let (s_a, q_a) = sums(pooled);
    let (n_i, n_a) = (own.len() as f64, pooled.len() as f64);
    let d = s_i * n_a - s_a * n_i;
    let spread_i = (n_i * q_i - s_i * s_i).max(0.0);
    let spread_a = (n_a * q_a - s_a * s_a).max(0.0);
    let den = n_a * n_a * spread_i + n_i * n_i * spread_a;
    if den > 0.0 {
        d * d / den
    } else {
        0.0
    }
}

/// Log-variance of one trial's channel signal, floored at `ln(1e-12)`.
pub fn trial_channel_feature(set: &EpochSet, trial: usize, channel: usize) -> Result<f64> {
    if trial >= set.n_trials {
        return Err(Error::IndexOutOfRange {
            what: "trial",
            index: trial,
            len: set.n_trials,
        });
    }
    if channel >= set.n_channels() {
        return Err(Error::IndexOutOfRange {
            what: "channel",
            index: channel,
            len: set.n_channels(),
        });
    }
    Ok(dsp::log_variance(set.signal(trial, channel)))
}

fn check_candidates(candidates: &[String], n_trials: usize) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate channels".into()));
    }
    if n_trials < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 trials to score, got {n_trials}"
        )));
    }
    Ok(())
}

/// Per-candidate Fisher ratio of the per-trial log-variance feature against
/// the pooled feature of all candidates.
pub fn fisher_ratio_scores(set: &EpochSet, candidates: &[String]) -> Result<Vec<ChannelScore>> {
    check_candidates(candidates, set.n_trials)?;
    let features = candidates
        .iter()
        .map(|name| {
            let c = set.channel_index(name)?;
            (0..set.n_trials)
                .map(|t| trial_channel_feature(set, t, c))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(score_channels(candidates, &features))
}

/// Score precomputed per-trial features, `features[channel][trial]`.
pub fn score_channels(candidates: &[String], features: &[Vec<f64>]) -> Vec<ChannelScore> {
    let pooled: Vec<f64> = features.concat();
    candidates
        .iter()
        .zip(features)
        .map(|(name, own)| {
            let q = fisher_quotient(own, &pooled);
            ChannelScore {
                channel: name.clone(),
                mu_i: q.mu_i,
                sigma_i: q.sigma_i,
                mu_all: q.mu_all,
                sigma_all: q.sigma_all,
                fr: q.value,
            }
        })
        .collect()
}

fn channel_rank(name: &str) -> (u8, &str) {
    let r = match name {
        "C3" => 0,
        "C4" => 1,
        "Cz" => 2,
        _ => 3,
    };
    (r, name)
}

/// Highest score wins; ties go C3, then C4, then Cz, then by name.
pub fn select_channel(scores: &[ChannelScore]) -> Result<String> {
    scores
        .iter()
        .min_by(|a, b| {
            b.fr.total_cmp(&a.fr)
                .then_with(|| channel_rank(&a.channel).cmp(&channel_rank(&b.channel)))
        })
        .map(|s| s.channel.clone())
        .ok_or_else(|| Error::InvalidInput("no channel scores".into()))
}

/// Per-trial band log-variance, `out[band][trial]`, for one channel.
pub fn band_features(dec: &BandDecomposition, channel: usize) -> Result<Vec<Vec<f64>>> {
    (0..dec.n_bands())
        .map(|b| {
            (0..dec.n_trials)
                .map(|t| band_signal(dec, t, channel, b).map(dsp::log_variance))
                .collect()
        })
        .collect()
}

/// Score every band of the selected channel against the same band pooled
/// over all candidate channels.
pub fn pearson_ratio_scores(
    dec: &BandDecomposition,
    selected: &str,
    candidates: &[String],
) -> Result<Vec<BandScore>> {
    check_candidates(candidates, dec.n_trials)?;
    if !candidates.iter().any(|c| c == selected) {
        return Err(Error::ChannelNotFound(selected.to_string()));
    }
    let sel = dec.channel_index(selected)?;
    let per_channel = candidates
        .iter()
        .map(|name| band_features(dec, dec.channel_index(name)?))
        .collect::<Result<Vec<_>>>()?;
    let own = band_features(dec, sel)?;
    Ok(score_bands(&dec.bands, &own, &per_channel))
}

/// `own[band][trial]` against `all[channel][band][trial]`.
pub fn score_bands(bands: &[BandSpec], own: &[Vec<f64>], all: &[Vec<Vec<f64>>]) -> Vec<BandScore> {
    bands
        .iter()
        .enumerate()
        .map(|(j, band)| {
            let pooled: Vec<f64> = all.iter().flat_map(|ch| ch[j].iter().copied()).collect();
            let q = fisher_quotient(&own[j], &pooled);
            BandScore {
                band: *band,
                mu_i: q.mu_i,
                sigma_i: q.sigma_i,
                mu_all: q.mu_all,
                sigma_all: q.sigma_all,
                pr: q.value,
            }
        })
        .collect()
}

/// Sort bands by score (descending, ties to the lower band edge) and form the
/// top-n groups for `n = 1..=n_max`.
pub fn rank_and_group_bands(scores: &[BandScore], n_max: usize) -> Result<RankedBands> {
    if scores.len() < n_max {
        return Err(Error::InvalidInput(format!(
            "{} bands scored, need at least n_max = {n_max}",
            scores.len()
        )));
    }
    let mut sorted: Vec<&BandScore> = scores.iter().collect();
    sorted.sort_by(|a, b| {
        b.pr.total_cmp(&a.pr)
            .then_with(|| a.band.lo_hz.partial_cmp(&b.band.lo_hz).unwrap_or(Ordering::Equal))
    });
    let ranked: Vec<BandSpec> = sorted.iter().map(|s| s.band).collect();
    let groups = (1..=n_max).map(|n| (n, ranked[..n].to_vec())).collect();
    Ok(RankedBands { ranked, groups })
}

/// Class-separation variant: `(mean_a - mean_b)^2 / (var_a + var_b)` over the
/// two classes' per-trial values. Stored as `mu_i/sigma_i` for the first class
/// and `mu_all/sigma_all` for the second.
pub fn class_quotient(values: &[f64], labels: &[String]) -> Result<Quotient> {
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::ClassCount(classes.into_iter().cloned().collect()));
    }
    let split = |c: &String| -> Vec<f64> {
        values
            .iter()
            .zip(labels)
            .filter(|(_, l)| *l == c)
            .map(|(v, _)| *v)
            .collect()
    };
    Ok(fisher_quotient(&split(classes[0]), &split(classes[1])))
}

/// Full selection on a windowed set and its decomposition.
pub fn select(
    windowed: &EpochSet,
    dec: &BandDecomposition,
    candidates: &[String],
    n_max: usize,
    class_aware: bool,
) -> Result<SelectionResult> {
    let (channel_scores, band_scores, selected_channel) = if class_aware {
        check_candidates(candidates, windowed.n_trials)?;
        let mut scores = Vec::with_capacity(candidates.len());
        for name in candidates {
            let c = windowed.channel_index(name)?;
            let f: Vec<f64> = (0..windowed.n_trials)
                .map(|t| dsp::log_variance(windowed.signal(t, c)))
                .collect();
            let q = class_quotient(&f, &windowed.labels)?;
            scores.push(ChannelScore {
                channel: name.clone(),
                mu_i: q.mu_i,
                sigma_i: q.sigma_i,
                mu_all: q.mu_all,
                sigma_all: q.sigma_all,
                fr: q.value,
            });
        }
        let selected = select_channel(&scores)?;
        let own = band_features(dec, dec.channel_index(&selected)?)?;
        let bands = dec
            .bands
            .iter()
            .zip(&own)
            .map(|(band, f)| {
                class_quotient(f, &dec.labels).map(|q| BandScore {
                    band: *band,
                    mu_i: q.mu_i,
                    sigma_i: q.sigma_i,
                    mu_all: q.mu_all,
                    sigma_all: q.sigma_all,
                    pr: q.value,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (scores, bands, selected)
    } else {
        let scores = fisher_ratio_scores(windowed, candidates)?;
        let selected = select_channel(&scores)?;
        let bands = pearson_ratio_scores(dec, &selected, candidates)?;
        (scores, bands, selected)
    };
    let RankedBands { ranked, groups } = rank_and_group_bands(&band_scores, n_max)?;
    Ok(SelectionResult {
        channel_scores,
        selected_channel,
        band_scores,
        ranked_bands: ranked,
        groups,
    })
}
