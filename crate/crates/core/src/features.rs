//! Per-trial feature matrices.
//!
//! The FRPC path takes, for every band of a ranked group on the selected
//! channel, two temporal features (log-variance, Hjorth mobility) and one
//! spectral feature (log Welch band power). The baseline path computes ERD/S
//! percentages between a pre-cue reference window and the action window.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::epochset::EpochSet;
use crate::error::{Error, Result};
use crate::filterbank::{band_signal, filter_signal, Backend, BandDecomposition, BandSpec};
use crate::preprocess::seconds_to_samples;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major.
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
    pub labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<Vec<f64>>, feature_names: Vec<String>, labels: Vec<String>) -> Result<Self> {
        let n_cols = feature_names.len();
        if values.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                values.len(),
                labels.len()
            )));
        }
        if let Some(r) = values.iter().find(|r| r.len() != n_cols) {
            return Err(Error::FeatureMismatch {
                expected: n_cols,
                actual: r.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(*n)) {
            return Err(Error::InvalidInput(format!("duplicate feature name {dup:?}")));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(FeatureMatrix {
            n_rows: values.len(),
            n_cols,
            values: values.concat(),
            feature_names,
            labels,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            values,
            feature_names: self.feature_names.clone(),
            labels: rows.iter().map(|&r| self.labels[r].clone()).collect(),
        }
    }

    /// Header of feature names plus `label`, one row per trial.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = self.feature_names.join(",");
        header.push_str(",label");
        writeln!(w, "{header}")?;
        for i in 0..self.n_rows {
            let cells: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},{}", cells.join(","), self.labels[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    LogVariance,
    HjorthMobility,
    WelchLogPower,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [
        FeatureKind::LogVariance,
        FeatureKind::HjorthMobility,
        FeatureKind::WelchLogPower,
    ];

    fn tag(self) -> &'static str {
        match self {
            FeatureKind::LogVariance => "logvar",
            FeatureKind::HjorthMobility => "mobility",
            FeatureKind::WelchLogPower => "welch",
        }
    }
}

pub fn hjorth_mobility(x: &[f64]) -> f64 {
    let v = dsp::variance(x);
    if x.len() < 2 || v == 0.0 {
        return 0.0;
    }
    let diff: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    (dsp::variance(&diff) / v).sqrt()
}

/// Log of the Welch band power (1 s Hann segments, 50% overlap) over the band.
pub fn welch_log_band_power(x: &[f64], fs: f64, band: &BandSpec) -> f64 {
    let seg = (fs.round() as usize).max(1);
    let (f, p) = dsp::welch(x, fs, seg, seg / 2);
    dsp::band_power(&f, &p, band.lo_hz, band.hi_hz)
        .max(dsp::LOG_FLOOR)
        .ln()
}

pub fn feature_value(kind: FeatureKind, x: &[f64], fs: f64, band: &BandSpec) -> f64 {
    match kind {
        FeatureKind::LogVariance => dsp::log_variance(x),
        FeatureKind::HjorthMobility => hjorth_mobility(x),
        FeatureKind::WelchLogPower => welch_log_band_power(x, fs, band),
    }
}

/// FRPC features with the default (log-variance, mobility, Welch) triple.
pub fn extract_frpc_features(
    dec: &BandDecomposition,
    selected: &str,
    group: &[BandSpec],
) -> Result<FeatureMatrix> {
    extract_features_with(dec, selected, group, &FeatureKind::ALL)
}

/// Columns are ordered by band rank, then by `kinds`.
pub fn extract_features_with(
    dec: &BandDecomposition,
    selected: &str,
    group: &[BandSpec],
    kinds: &[FeatureKind],
) -> Result<FeatureMatrix> {
    if group.is_empty() {
        return Err(Error::InvalidInput("empty band group".into()));
    }
    if kinds.is_empty() {
        return Err(Error::InvalidInput("no feature kinds".into()));
    }
    let ch = dec.channel_index(selected)?;
    let band_idx = group
        .iter()
        .map(|b| dec.band_index(b))
        .collect::<Result<Vec<_>>>()?;
    let names = group
        .iter()
        .flat_map(|b| kinds.iter().map(move |k| format!("{}:{}", b.label(), k.tag())))
        .collect();
    let rows = (0..dec.n_trials)
        .map(|t| {
            let mut row = Vec::with_capacity(group.len() * kinds.len());
            for (b, &j) in group.iter().zip(&band_idx) {
                let x = band_signal(dec, t, ch, j)?;
                for &k in kinds {
                    row.push(feature_value(k, x, dec.fs_hz, b));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(rows, names, dec.labels.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErdsConfig {
    /// Seconds relative to the cue; negative is pre-cue.
    pub reference_window: (f64, f64),
    pub action_window: (f64, f64),
    pub bands: Vec<BandSpec>,
}

impl Default for ErdsConfig {
    fn default() -> Self {
        ErdsConfig {
            reference_window: (-2.0, -0.5),
            action_window: (0.5, 2.5),
            bands: vec![BandSpec::new(8.0, 12.0), BandSpec::new(16.0, 24.0)],
        }
    }
}

impl ErdsConfig {
    fn sample_range(&self, set: &EpochSet, w: (f64, f64)) -> Result<(usize, usize)> {
        let cue = set.cue_sample as i64;
        let start = cue + seconds_to_samples(w.0, set.fs_hz);
        let end = cue + seconds_to_samples(w.1, set.fs_hz);
        if start < 0 || end > set.n_samples as i64 || end <= start {
            return Err(Error::WindowOutOfBounds {
                start,
                end,
                n_samples: set.n_samples,
            });
        }
        Ok((start as usize, end as usize))
    }

    /// Sample ranges of (reference, action) in `set`.
    pub fn ranges(&self, set: &EpochSet) -> Result<((usize, usize), (usize, usize))> {
        let (r, a) = (self.reference_window, self.action_window);
        if r.0 < a.1 && a.0 < r.1 {
            return Err(Error::Config(format!(
                "reference window {r:?} overlaps action window {a:?}"
            )));
        }
        Ok((self.sample_range(set, r)?, self.sample_range(set, a)?))
    }
}

fn erd(action: f64, reference: f64) -> f64 {
    100.0 * (action - reference) / reference.max(dsp::LOG_FLOOR)
}

fn erds_for_signal(
    x: &[f64],
    fs: f64,
    bands: &[BandSpec],
    (r0, r1): (usize, usize),
    (a0, a1): (usize, usize),
) -> Vec<f64> {
    filter_signal(x, fs, bands, Backend::Morlet)
        .iter()
        .map(|y| erd(dsp::variance(&y[a0..a1]), dsp::variance(&y[r0..r1])))
        .collect()
}

/// ERD/S percent per trial: `100·(A − R)/R` with A, R the band-filtered
/// variance in the action and reference windows.
pub fn erds_percent(set: &EpochSet, cfg: &ErdsConfig, channel: &str, band: &BandSpec) -> Result<Vec<f64>> {
    band.check(set.fs_hz)?;
    let (r, a) = cfg.ranges(set)?;
    let c = set.channel_index(channel)?;
    Ok((0..set.n_trials)
        .into_par_iter()
        .map(|t| erds_for_signal(set.signal(t, c), set.fs_hz, std::slice::from_ref(band), r, a)[0])
        .collect())
}

/// One ERD/S column per (channel, band), channel-major.
pub fn extract_erds_features(set: &EpochSet, cfg: &ErdsConfig, channels: &[String]) -> Result<FeatureMatrix> {
    for b in &cfg.bands {
        b.check(set.fs_hz)?;
    }
    let (r, a) = cfg.ranges(set)?;
    let idx = channels
        .iter()
        .map(|c| set.channel_index(c))
        .collect::<Result<Vec<_>>>()?;
    let names = channels
        .iter()
        .flat_map(|c| cfg.bands.iter().map(move |b| format!("{c}:{}:erds", b.label())))
        .collect();
    let rows: Vec<Vec<f64>> = (0..set.n_trials)
        .into_par_iter()
        .map(|t| {
            idx.iter()
                .flat_map(|&c| erds_for_signal(set.signal(t, c), set.fs_hz, &cfg.bands, r, a))
                .collect()
        })
        .collect();
    FeatureMatrix::new(rows, names, set.labels.clone())
}
