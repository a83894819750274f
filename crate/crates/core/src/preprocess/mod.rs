//! Line-noise notch, optional ICA artifact attenuation, and carving of the
//! post-cue analysis window on the motor-cortex channels.

mod ica;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ica::{excess_kurtosis, ica_clean, fast_ica, IcaModel};

use crate::dsp::{self, Biquad};
use crate::epochset::EpochSet;
use crate::error::{Error, Result};

/// Notch frequencies at or above this fraction of fs are skipped.
pub const NOTCH_NYQUIST_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IcaComponents {
    Count(usize),
    All(AllTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllTag {
    All,
}

impl Default for IcaComponents {
    fn default() -> Self {
        IcaComponents::All(AllTag::All)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub notch_hz: Vec<f64>,
    pub notch_q: f64,
    pub ica_enabled: bool,
    pub ica_components: IcaComponents,
    pub ica_reject_kurtosis: f64,
    /// Seconds after the cue, `[start, end)`.
    pub analysis_window: (f64, f64),
    pub channel_subset: Vec<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            notch_hz: vec![50.0, 100.0],
            notch_q: 30.0,
            ica_enabled: false,
            ica_components: IcaComponents::default(),
            ica_reject_kurtosis: 5.0,
            analysis_window: (0.5, 2.5),
            channel_subset: vec!["C3".into(), "Cz".into(), "C4".into()],
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.analysis_window;
        if !(t1 > t0 && t0 >= 0.0) {
            return Err(Error::Config(format!(
                "analysis window ({t0}, {t1}) must satisfy end > start >= 0"
            )));
        }
        if !(self.notch_q > 0.0) {
            return Err(Error::Config(format!("notch_q {} must be > 0", self.notch_q)));
        }
        if let Some(f) = self.notch_hz.iter().find(|f| !(**f > 0.0)) {
            return Err(Error::Config(format!("notch frequency {f} must be > 0")));
        }
        Ok(())
    }
}

/// Notch frequencies from `cfg` that will actually be applied at `fs`.
pub fn active_notches(cfg: &PreprocessConfig, fs: f64) -> Vec<f64> {
    cfg.notch_hz
        .iter()
        .copied()
        .filter(|&f| {
            let keep = f < NOTCH_NYQUIST_FRACTION * fs;
            if !keep {
                info!("skipping {f} Hz notch: at or above {NOTCH_NYQUIST_FRACTION} x fs ({fs} Hz)");
            }
            keep
        })
        .collect()
}

/// Zero-phase notch of every configured line frequency below 0.45·fs.
pub fn notch_filter(set: &EpochSet, cfg: &PreprocessConfig) -> Result<EpochSet> {
    cfg.validate()?;
    let sections: Vec<Biquad> = active_notches(cfg, set.fs_hz)
        .into_iter()
        .map(|f| Biquad::notch(f, cfg.notch_q, set.fs_hz))
        .collect();
    let mut out = set.clone();
    if sections.is_empty() {
        return Ok(out);
    }
    let n = set.n_samples;
    out.data
        .par_chunks_mut(n.max(1))
        .for_each(|signal| {
            for s in &sections {
                let y = dsp::filtfilt(std::slice::from_ref(s), signal, dsp::settle_length(&[*s]));
                signal.copy_from_slice(&y);
            }
        });
    Ok(out)
}

/// Sample offset of `t` seconds, rounded half away from zero.
pub fn seconds_to_samples(t: f64, fs: f64) -> i64 {
    (t * fs).round() as i64
}

/// Cut `[cue + t_start·fs, cue + t_end·fs)` from every trial and keep the
/// configured channels in order. The output cue is at sample 0.
pub fn carve_window(set: &EpochSet, cfg: &PreprocessConfig) -> Result<EpochSet> {
    cfg.validate()?;
    let subset = set.select_channels(&cfg.channel_subset)?;
    let (t0, t1) = cfg.analysis_window;
    carve(&subset, t0, t1)
}

/// Cut `[cue + t0·fs, cue + t1·fs)` from every trial, all channels kept.
/// `t0` may be negative (pre-cue).
pub fn carve(set: &EpochSet, t0: f64, t1: f64) -> Result<EpochSet> {
    let cue = set.cue_sample as i64;
    let start = cue + seconds_to_samples(t0, set.fs_hz);
    let end = cue + seconds_to_samples(t1, set.fs_hz);
    if start < 0 || end > set.n_samples as i64 || end <= start {
        return Err(Error::WindowOutOfBounds {
            start,
            end,
            n_samples: set.n_samples,
        });
    }
    let (start, end) = (start as usize, end as usize);
    let len = end - start;
    let mut data = Vec::with_capacity(set.n_trials * set.n_channels() * len);
    for t in 0..set.n_trials {
        for c in 0..set.n_channels() {
            data.extend_from_slice(&set.signal(t, c)[start..end]);
        }
    }
    Ok(EpochSet {
        subject_id: set.subject_id.clone(),
        fs_hz: set.fs_hz,
        channel_names: set.channel_names.clone(),
        labels: set.labels.clone(),
        cue_sample: 0,
        n_trials: set.n_trials,
        n_samples: len,
        data,
    })
}
