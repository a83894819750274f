//! Synthetic epoched EEG with planted class-dependent band power.
//!
//! Background is Gaussian noise shaped to a 1/f^k spectrum, independent per
//! trial and channel. A planted effect adds white noise shaped by the
//! filterbank's own Morlet response for the band, scaled so the band power
//! seen through that filter grows by the requested multiplier. Every
//! (trial, channel, effect) draws from its own seeded stream.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::epochset::{validate_epochset, EpochSet};
use crate::error::{Error, Result};
use crate::filterbank::{filter_signal, Backend, BandSpec};
use crate::rng;

/// Background spectrum is flat below this frequency.
const KNEE_HZ: f64 = 1.0;
/// Raised-cosine ramp length at each end of a time-limited effect.
const RAMP_S: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    /// `None` plants on every class.
    #[serde(default)]
    pub class: Option<String>,
    pub channel: String,
    pub band: BandSpec,
    pub multiplier: f64,
    /// Seconds relative to the cue; `None` covers the whole trial.
    #[serde(default)]
    pub span: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub subject_id: String,
    pub fs_hz: f64,
    pub trials_per_class: usize,
    pub trial_seconds: f64,
    pub cue_seconds: f64,
    pub channels: Vec<String>,
    pub classes: Vec<String>,
    pub background_exponent: f64,
    /// Background RMS, microvolts.
    pub background_amplitude: f64,
    pub effects: Vec<PlantedEffect>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            subject_id: "synth".into(),
            fs_hz: 250.0,
            trials_per_class: 100,
            trial_seconds: 7.0,
            cue_seconds: 3.0,
            channels: vec!["C3".into(), "Cz".into(), "C4".into()],
            classes: vec!["left".into(), "right".into()],
            background_exponent: 1.0,
            background_amplitude: 10.0,
            effects: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// The usual oracle: one class gets `multiplier` times the band power on
    /// one channel.
    pub fn with_effect(mut self, class: &str, channel: &str, band: BandSpec, multiplier: f64) -> Self {
        self.effects.push(PlantedEffect {
            class: Some(class.into()),
            channel: channel.into(),
            band,
            multiplier,
            span: None,
        });
        self
    }

    pub fn n_samples(&self) -> usize {
        (self.trial_seconds * self.fs_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.classes.len() < 2 {
            return bad("at least 2 classes are needed".into());
        }
        if !(self.fs_hz > 0.0) || self.trials_per_class == 0 || self.n_samples() < 2 {
            return bad("fs, trials per class and trial length must be positive".into());
        }
        if !(0.0..=self.trial_seconds).contains(&self.cue_seconds) {
            return bad(format!("cue at {} s is outside the trial", self.cue_seconds));
        }
        if !(self.background_amplitude >= 0.0) || !self.background_exponent.is_finite() {
            return bad("background amplitude must be >= 0 and exponent finite".into());
        }
        for e in &self.effects {
            if !(e.multiplier > 0.0) {
                return bad(format!("multiplier {} must be > 0", e.multiplier));
            }
            if !(e.band.lo_hz >= 8.0 && e.band.hi_hz <= 40.0) {
                return bad(format!("band {} is outside 8-40 Hz", e.band.label()));
            }
            e.band.check(self.fs_hz)?;
            if !self.channels.contains(&e.channel) {
                return Err(Error::ChannelNotFound(e.channel.clone()));
            }
            if let Some(c) = &e.class {
                if !self.classes.contains(c) {
                    return Err(Error::ClassNotFound(c.clone()));
                }
            }
            if let Some((a, b)) = e.span {
                if !(b > a) {
                    return bad(format!("effect span ({a}, {b}) is empty"));
                }
            }
        }
        Ok(())
    }
}

fn frequencies(n: usize, fs: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        let k = if k <= n / 2 { k } else { n - k };
        k as f64 * fs / n as f64
    })
}

fn envelope(span: Option<(f64, f64)>, cue_s: f64, fs: f64, n: usize) -> Option<Vec<f64>> {
    let (a, b) = span?;
    let (a, b) = (cue_s + a, cue_s + b);
    let ramp = RAMP_S.min((b - a) / 2.0);
    Some(
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let d = (t - a).min(b - t);
                if d <= 0.0 {
                    0.0
                } else if d >= ramp {
                    1.0
                } else {
                    0.5 - 0.5 * (std::f64::consts::PI * d / ramp).cos()
                }
            })
            .collect(),
    )
}

struct Shaper {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Shaper {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Shaper {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        }
    }

    /// Unit-variance white noise from `seed/stream`, filtered by `gain`.
    fn shaped_noise(&self, seed: u64, stream: u64, gain: &[f64]) -> Vec<f64> {
        let mut r = rng::stream(seed, stream);
        let mut buf: Vec<Complex64> = (0..self.n)
            .map(|_| Complex64::new(StandardNormal.sample(&mut r), 0.0))
            .collect();
        self.fwd.process(&mut buf);
        for (v, g) in buf.iter_mut().zip(gain) {
            *v *= g;
        }
        self.inv.process(&mut buf);
        buf.iter().map(|v| v.re / self.n as f64).collect()
    }
}

/// Labels cycle through the classes, so trial `t` has class `t % n_classes`.
pub fn generate(spec: &SynthSpec) -> Result<EpochSet> {
    spec.validate()?;
    let n = spec.n_samples();
    let n_ch = spec.channels.len();
    let n_trials = spec.trials_per_class * spec.classes.len();

    // background gain, scaled so the time-domain RMS is the amplitude
    let mut bg: Vec<f64> = frequencies(n, spec.fs_hz)
        .map(|f| {
            if f == 0.0 {
                0.0
            } else {
                f.max(KNEE_HZ).powf(-spec.background_exponent / 2.0)
            }
        })
        .collect();
    let mean_sq = bg.iter().map(|g| g * g).sum::<f64>() / n as f64;
    let scale = if mean_sq > 0.0 {
        spec.background_amplitude / mean_sq.sqrt()
    } else {
        0.0
    };
    bg.iter_mut().for_each(|g| *g *= scale);

    // effect gains: c * G with c^2 = (m - 1) sum(S^2 G^2) / sum(G^4)
    let effect_gain: Vec<Vec<f64>> = spec
        .effects
        .iter()
        .map(|e| {
            let g: Vec<f64> = frequencies(n, spec.fs_hz)
                .map(|f| e.band.morlet_response(f))
                .collect();
            let num: f64 = bg.iter().zip(&g).map(|(s, g)| (s * g).powi(2)).sum();
            let den: f64 = g.iter().map(|g| g.powi(4)).sum();
            let c = if den > 0.0 {
                ((e.multiplier - 1.0).max(0.0) * num / den).sqrt()
            } else {
                0.0
            };
            g.into_iter().map(|g| c * g).collect()
        })
        .collect();
    let envelopes: Vec<Option<Vec<f64>>> = spec
        .effects
        .iter()
        .map(|e| envelope(e.span, spec.cue_seconds, spec.fs_hz, n))
        .collect();
    let effect_channel: Vec<usize> = spec
        .effects
        .iter()
        .map(|e| spec.channels.iter().position(|c| *c == e.channel).expect("validated"))
        .collect();

    let labels: Vec<String> = (0..n_trials)
        .map(|t| spec.classes[t % spec.classes.len()].clone())
        .collect();
    let shaper = Shaper::new(n);
    let trials: Vec<Vec<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::with_capacity(n_ch * n);
            for c in 0..n_ch {
                let mut x = shaper.shaped_noise(spec.seed, rng::trial_stream(t, c, 0), &bg);
                for (k, e) in spec.effects.iter().enumerate() {
                    let applies = e.class.as_ref().map_or(true, |cl| *cl == labels[t]);
                    if effect_channel[k] != c || !applies || e.multiplier <= 1.0 {
                        continue;
                    }
                    let purpose = u8::try_from(k + 1).unwrap_or(u8::MAX);
                    let y = shaper.shaped_noise(spec.seed, rng::trial_stream(t, c, purpose), &effect_gain[k]);
                    match &envelopes[k] {
                        Some(env) => x.iter_mut().zip(&y).zip(env).for_each(|((a, b), w)| *a += b * w),
                        None => x.iter_mut().zip(&y).for_each(|(a, b)| *a += b),
                    }
                }
                out.extend(x);
            }
            out
        })
        .collect();

    let mut set = EpochSet {
        subject_id: spec.subject_id.clone(),
        fs_hz: spec.fs_hz,
        channel_names: spec.channels.clone(),
        labels,
        cue_sample: (spec.cue_seconds * spec.fs_hz).round() as usize,
        n_trials,
        n_samples: n,
        data: trials.concat(),
    };
    // the on-disk format is f32; round here so memory and file agree
    set.data.iter_mut().for_each(|v| *v = *v as f32 as f64);
    let problems = validate_epochset(&set);
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    Ok(set)
}

/// Mean per-trial band power of `class_a` over that of `class_b`, measured
/// through the Morlet band filter on whole trials.
pub fn measured_band_power_ratio(
    set: &EpochSet,
    channel: &str,
    band: &BandSpec,
    class_a: &str,
    class_b: &str,
) -> Result<f64> {
    let c = set.channel_index(channel)?;
    let power = |class: &str| -> Result<f64> {
        let trials: Vec<usize> = (0..set.n_trials).filter(|&t| set.labels[t] == class).collect();
        if trials.is_empty() {
            return Err(Error::ClassNotFound(class.to_string()));
        }
        let p: Vec<f64> = trials
            .par_iter()
            .map(|&t| {
                let y = &filter_signal(set.signal(t, c), set.fs_hz, std::slice::from_ref(band), Backend::Morlet)[0];
                y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
            })
            .collect();
        Ok(dsp::mean(&p))
    };
    let (a, b) = (power(class_a)?, power(class_b)?);
    Ok(if a == b { 1.0 } else { a / b })
}
