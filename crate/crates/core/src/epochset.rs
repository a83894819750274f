//! Epoched multi-channel recordings and their on-disk form.
//!
//! An [`EpochSet`] holds one subject/session: `n_trials` cue-aligned trials of
//! `n_channels` × `n_samples` samples each, plus one class label per trial.
//!
//! On disk it is a directory with two files:
//!
//! ```text
//! manifest.json   metadata, dimensions, dtype/layout tags, optional sha256
//! data.f32        raw 32-bit little-endian floats, trial-major
//!                 ([trial][channel][sample], sample fastest)
//! ```
//!
//! The tensor is held as `f64` in memory and narrowed to `f32` on write, so a
//! round trip is bit-exact for any set whose samples are representable in
//! `f32` (which includes every set that was itself read from disk).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_TAG: &str = "f32le";
pub const LAYOUT_TAG: &str = "trial-major";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.f32";

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub subject_id: String,
    pub fs_hz: f64,
    pub channel_names: Vec<String>,
    pub labels: Vec<String>,
    /// Sample index of the cue within each trial.
    pub cue_sample: usize,
    pub n_trials: usize,
    pub n_samples: usize,
    /// Microvolts, `[trial][channel][sample]` flattened.
    pub data: Vec<f64>,
}

impl EpochSet {
    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    fn offset(&self, trial: usize, channel: usize) -> usize {
        (trial * self.n_channels() + channel) * self.n_samples
    }

    pub fn signal(&self, trial: usize, channel: usize) -> &[f64] {
        let o = self.offset(trial, channel);
        &self.data[o..o + self.n_samples]
    }

    pub fn signal_mut(&mut self, trial: usize, channel: usize) -> &mut [f64] {
        let o = self.offset(trial, channel);
        let n = self.n_samples;
        &mut self.data[o..o + n]
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::ChannelNotFound(name.to_string()))
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.labels.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for l in &self.labels {
            *m.entry(l.clone()).or_insert(0) += 1;
        }
        m
    }

    /// Keep only the given trials, in the given order.
    pub fn select_trials(&self, trials: &[usize]) -> EpochSet {
        let per_trial = self.n_channels() * self.n_samples;
        let mut data = Vec::with_capacity(trials.len() * per_trial);
        for &t in trials {
            let o = t * per_trial;
            data.extend_from_slice(&self.data[o..o + per_trial]);
        }
        EpochSet {
            labels: trials.iter().map(|&t| self.labels[t].clone()).collect(),
            n_trials: trials.len(),
            data,
            ..self.clone_meta()
        }
    }

    /// Keep only trials whose label is one of `classes`.
    pub fn select_classes(&self, classes: &[String]) -> Result<EpochSet> {
        for c in classes {
            if !self.labels.contains(c) {
                return Err(Error::ClassNotFound(c.clone()));
            }
        }
        let idx: Vec<usize> = (0..self.n_trials)
            .filter(|&t| classes.contains(&self.labels[t]))
            .collect();
        Ok(self.select_trials(&idx))
    }

    /// Keep only the named channels, in the given order.
    pub fn select_channels(&self, names: &[String]) -> Result<EpochSet> {
        let idx = names
            .iter()
            .map(|n| self.channel_index(n))
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.n_trials * idx.len() * self.n_samples);
        for t in 0..self.n_trials {
            for &c in &idx {
                data.extend_from_slice(self.signal(t, c));
            }
        }
        Ok(EpochSet {
            channel_names: names.to_vec(),
            data,
            ..self.clone_meta()
        })
    }

    /// Append the trials of `other`; metadata other than labels must agree.
    pub fn concat(&self, other: &EpochSet) -> Result<EpochSet> {
        if self.channel_names != other.channel_names
            || self.fs_hz != other.fs_hz
            || self.n_samples != other.n_samples
            || self.cue_sample != other.cue_sample
        {
            return Err(Error::InvalidInput(format!(
                "cannot merge sessions of {:?}: channel/fs/length/cue layout differ",
                self.subject_id
            )));
        }
        let mut out = self.clone();
        out.labels.extend(other.labels.iter().cloned());
        out.data.extend_from_slice(&other.data);
        out.n_trials += other.n_trials;
        Ok(out)
    }

    fn clone_meta(&self) -> EpochSet {
        EpochSet {
            subject_id: self.subject_id.clone(),
            fs_hz: self.fs_hz,
            channel_names: self.channel_names.clone(),
            labels: self.labels.clone(),
            cue_sample: self.cue_sample,
            n_trials: self.n_trials,
            n_samples: self.n_samples,
            data: Vec::new(),
        }
    }
}

/// One failed invariant of an [`EpochSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LabelCount { labels: usize, trials: usize },
    TooFewClasses { distinct: usize },
    CueOutOfRange { cue_sample: usize, n_samples: usize },
    NonPositiveFs { fs_hz: f64 },
    DuplicateChannel { name: String },
    NonFinite {
        trial: usize,
        channel: usize,
        sample: usize,
        count: usize,
    },
    DataLength { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LabelCount { labels, trials } => {
                write!(f, "{labels} labels for {trials} trials")
            }
            Violation::TooFewClasses { distinct } => {
                write!(f, "labels span {distinct} distinct classes, need at least 2")
            }
            Violation::CueOutOfRange {
                cue_sample,
                n_samples,
            } => write!(f, "cue_sample {cue_sample} not below n_samples {n_samples}"),
            Violation::NonPositiveFs { fs_hz } => write!(f, "fs_hz {fs_hz} is not positive"),
            Violation::DuplicateChannel { name } => write!(f, "duplicate channel name {name:?}"),
            Violation::NonFinite {
                trial,
                channel,
                sample,
                count,
            } => write!(
                f,
                "{count} non-finite samples, first at trial {trial} channel {channel} sample {sample}"
            ),
            Violation::DataLength { expected, actual } => {
                write!(f, "tensor holds {actual} values, dimensions need {expected}")
            }
        }
    }
}

/// Report every violated invariant once. An empty list means the set is valid.
pub fn validate_epochset(set: &EpochSet) -> Vec<Violation> {
    let mut out = Vec::new();
    if set.labels.len() != set.n_trials {
        out.push(Violation::LabelCount {
            labels: set.labels.len(),
            trials: set.n_trials,
        });
    }
    let distinct = set.labels.iter().collect::<HashSet<_>>().len();
    if distinct < 2 {
        out.push(Violation::TooFewClasses { distinct });
    }
    if set.cue_sample >= set.n_samples {
        out.push(Violation::CueOutOfRange {
            cue_sample: set.cue_sample,
            n_samples: set.n_samples,
        });
    }
    if !(set.fs_hz > 0.0 && set.fs_hz.is_finite()) {
        out.push(Violation::NonPositiveFs { fs_hz: set.fs_hz });
    }
    let mut seen = HashSet::new();
    for name in &set.channel_names {
        if !seen.insert(name) {
            out.push(Violation::DuplicateChannel { name: name.clone() });
        }
    }
    let expected = set.n_trials * set.n_channels() * set.n_samples;
    if set.data.len() != expected {
        out.push(Violation::DataLength {
            expected,
            actual: set.data.len(),
        });
    }
    let mut bad = set.data.iter().enumerate().filter(|(_, v)| !v.is_finite());
    if let Some((first, _)) = bad.next() {
        let per_trial = (set.n_channels() * set.n_samples).max(1);
        let n = set.n_samples.max(1);
        out.push(Violation::NonFinite {
            trial: first / per_trial,
            channel: (first % per_trial) / n,
            sample: first % n,
            count: 1 + bad.count(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSetManifest {
    pub format_version: u32,
    pub subject_id: String,
    pub fs_hz: f64,
    pub channel_names: Vec<String>,
    pub labels: Vec<String>,
    pub cue_sample: usize,
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub dtype: String,
    pub layout: String,
    pub data_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

impl EpochSetManifest {
    pub fn expected_bytes(&self) -> u64 {
        (self.n_trials as u64) * (self.n_channels as u64) * (self.n_samples as u64) * 4
    }
}

/// Write `set` into directory `dir` (created if needed) and return the manifest path.
pub fn write_epochset(set: &EpochSet, dir: &Path) -> Result<PathBuf> {
    let mut violations = validate_epochset(set);
    if violations.is_empty() {
        // values that overflow f32 become infinite on disk
        if let Some(i) = set.data.iter().position(|v| !(*v as f32).is_finite()) {
            let per_trial = set.n_channels() * set.n_samples;
            violations.push(Violation::NonFinite {
                trial: i / per_trial,
                channel: (i % per_trial) / set.n_samples,
                sample: i % set.n_samples,
                count: set.data.iter().filter(|v| !(**v as f32).is_finite()).count(),
            });
        }
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut bytes = Vec::with_capacity(set.data.len() * 4);
    for v in &set.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let data_path = dir.join(DATA_FILE);
    fs::write(&data_path, &bytes).map_err(|e| Error::io(&data_path, e))?;

    let manifest = EpochSetManifest {
        format_version: FORMAT_VERSION,
        subject_id: set.subject_id.clone(),
        fs_hz: set.fs_hz,
        channel_names: set.channel_names.clone(),
        labels: set.labels.clone(),
        cue_sample: set.cue_sample,
        n_trials: set.n_trials,
        n_channels: set.n_channels(),
        n_samples: set.n_samples,
        dtype: DTYPE_TAG.to_string(),
        layout: LAYOUT_TAG.to_string(),
        data_file: DATA_FILE.to_string(),
        checksum: Some(hex::encode(Sha256::digest(&bytes))),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

pub fn read_manifest(path: &Path) -> Result<EpochSetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Manifest {
        path: path.to_path_buf(),
        source,
    })
}

/// Read an EpochSet from its manifest. A directory path is resolved to its
/// `manifest.json`.
pub fn read_epochset(path: &Path) -> Result<EpochSet> {
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let m = read_manifest(&manifest_path)?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(m.format_version));
    }
    if m.dtype != DTYPE_TAG {
        return Err(Error::UnsupportedTag {
            field: "dtype",
            found: m.dtype,
            expected: DTYPE_TAG,
        });
    }
    if m.layout != LAYOUT_TAG {
        return Err(Error::UnsupportedTag {
            field: "layout",
            found: m.layout,
            expected: LAYOUT_TAG,
        });
    }
    if m.n_channels != m.channel_names.len() {
        return Err(Error::Validation(vec![Violation::DataLength {
            expected: m.channel_names.len(),
            actual: m.n_channels,
        }]));
    }

    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let data_path = base.join(&m.data_file);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    if bytes.len() as u64 != m.expected_bytes() {
        return Err(Error::DimensionMismatch {
            expected: m.expected_bytes(),
            actual: bytes.len() as u64,
        });
    }
    if let Some(expected) = &m.checksum {
        let actual = hex::encode(Sha256::digest(&bytes));
        if !actual.eq_ignore_ascii_case(expected) {
            return Err(Error::ChecksumMismatch {
                expected: expected.clone(),
                actual,
            });
        }
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();

    let set = EpochSet {
        subject_id: m.subject_id,
        fs_hz: m.fs_hz,
        channel_names: m.channel_names,
        labels: m.labels,
        cue_sample: m.cue_sample,
        n_trials: m.n_trials,
        n_samples: m.n_samples,
        data,
    };
    let violations = validate_epochset(&set);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(set)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn small_set(trials: usize, channels: usize, samples: usize) -> EpochSet {
        EpochSet {
            subject_id: "S01".into(),
            fs_hz: 250.0,
            channel_names: (0..channels).map(|c| format!("ch{c}")).collect(),
            labels: (0..trials)
                .map(|t| if t % 2 == 0 { "left" } else { "right" }.to_string())
                .collect(),
            cue_sample: 0,
            n_trials: trials,
            n_samples: samples,
            data: vec![0.0; trials * channels * samples],
        }
    }

    #[test]
    fn zeros_write_96_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set(2, 3, 4);
        write_epochset(&set, dir.path()).unwrap();
        let len = fs::metadata(dir.path().join(DATA_FILE)).unwrap().len();
        assert_eq!(len, 96);
    }

    #[test]
    fn round_trip_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = small_set(4, 3, 5);
        for (i, v) in set.data.iter_mut().enumerate() {
            *v = (i as f32 * 0.37 - 3.0) as f64;
        }
        let path = write_epochset(&set, dir.path()).unwrap();
        assert_eq!(read_epochset(&path).unwrap(), set);
        assert_eq!(read_epochset(dir.path()).unwrap(), set);
    }

    #[test]
    fn manifest_claiming_more_trials_than_bytes() {
        let dir = tempfile::tempdir().unwrap();
        // 10 x 2 x 1 f32 = 80 bytes on disk; the edited manifest asks for 10 x 2 x 2
        let set = small_set(10, 2, 1);
        let path = write_epochset(&set, dir.path()).unwrap();
        assert_eq!(fs::metadata(dir.path().join(DATA_FILE)).unwrap().len(), 80);
        let mut m = read_manifest(&path).unwrap();
        m.n_samples = 2;
        m.checksum = None;
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        match read_epochset(&path) {
            Err(Error::DimensionMismatch { expected, actual }) => {
                assert_eq!((expected, actual), (160, 80));
            }
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }

    #[test]
    fn truncated_data_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_epochset(&small_set(2, 3, 4), dir.path()).unwrap();
        let data_path = dir.path().join(DATA_FILE);
        let bytes = fs::read(&data_path).unwrap();
        fs::write(&data_path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(
            read_epochset(&path),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nan_sample_is_rejected_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_epochset(&small_set(2, 3, 4), dir.path()).unwrap();
        let data_path = dir.path().join(DATA_FILE);
        let mut bytes = fs::read(&data_path).unwrap();
        bytes[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&data_path, &bytes).unwrap();
        let mut m = read_manifest(&path).unwrap();
        m.checksum = None;
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        match read_epochset(&path) {
            Err(Error::Validation(v)) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(
                    v[0],
                    Violation::NonFinite {
                        trial: 0,
                        channel: 1,
                        sample: 1,
                        count: 1
                    }
                ));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_data_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_epochset(&small_set(2, 3, 4), dir.path()).unwrap();
        fs::remove_file(dir.path().join(DATA_FILE)).unwrap();
        assert!(matches!(read_epochset(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn unknown_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_epochset(&small_set(2, 3, 4), dir.path()).unwrap();
        let mut m = read_manifest(&path).unwrap();
        m.format_version = 2;
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        assert!(matches!(
            read_epochset(&path),
            Err(Error::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_epochset(&small_set(2, 3, 4), dir.path()).unwrap();
        let data_path = dir.path().join(DATA_FILE);
        let mut bytes = fs::read(&data_path).unwrap();
        bytes[0] ^= 0x01;
        fs::write(&data_path, &bytes).unwrap();
        assert!(matches!(
            read_epochset(&path),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn valid_set_has_no_violations() {
        assert!(validate_epochset(&small_set(2, 3, 4)).is_empty());
    }

    #[test]
    fn duplicate_channel_reported_once() {
        let mut set = small_set(2, 3, 4);
        set.channel_names = vec!["C3".into(), "Cz".into(), "C3".into()];
        assert_eq!(
            validate_epochset(&set),
            vec![Violation::DuplicateChannel { name: "C3".into() }]
        );
    }

    #[test]
    fn short_labels_report_both_lengths() {
        let mut set = small_set(4, 1, 2);
        set.labels.truncate(3);
        let v = validate_epochset(&set);
        assert_eq!(
            v,
            vec![Violation::LabelCount {
                labels: 3,
                trials: 4
            }]
        );
        assert!(v[0].to_string().contains('3') && v[0].to_string().contains('4'));
    }

    #[test]
    fn every_invariant_is_detectable() {
        let mut set = small_set(2, 2, 3);
        set.labels = vec!["a".into(), "a".into()];
        set.cue_sample = 3;
        set.fs_hz = 0.0;
        set.channel_names = vec!["x".into(), "x".into()];
        set.data[5] = f64::INFINITY;
        let v = validate_epochset(&set);
        assert_eq!(v.len(), 5);
        set.data.pop();
        assert_eq!(validate_epochset(&set).len(), 6);
    }

    #[test]
    fn write_rejects_invalid_set() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = small_set(2, 3, 4);
        set.data[0] = f64::NAN;
        assert!(matches!(
            write_epochset(&set, dir.path()),
            Err(Error::Validation(_))
        ));
        let mut big = small_set(2, 3, 4);
        big.data[0] = 1e300;
        assert!(matches!(
            write_epochset(&big, dir.path()),
            Err(Error::Validation(_))
        ));
    }
}
