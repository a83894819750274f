//! C ABI over the frpc pipeline.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`FrpcStatus`]; on failure [`frpc_last_error`] describes the error for the
//! calling thread. Panics are caught and reported as `FRPC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use frpc::epochset::{read_epochset, write_epochset, EpochSet};
use frpc::filterbank::BandSpec;
use frpc::pipeline::{analyze, PipelineConfig, SubjectAnalysis};
use frpc::synth::{generate, SynthSpec};
use frpc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    Validation = 5,
    InvalidArgument = 6,
    Analysis = 7,
    Panic = 8,
}

/// A loaded or generated EpochSet.
pub struct FrpcEpochSet {
    inner: EpochSet,
}

/// Result of analyzing one subject.
pub struct FrpcReport {
    inner: SubjectAnalysis,
    channel: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior nul"));
}

fn status_of(e: &Error) -> FrpcStatus {
    match e {
        Error::Io { .. } => FrpcStatus::Io,
        Error::Manifest { .. }
        | Error::UnsupportedVersion(_)
        | Error::UnsupportedTag { .. }
        | Error::DimensionMismatch { .. }
        | Error::ChecksumMismatch { .. } => FrpcStatus::Format,
        Error::Validation(_) => FrpcStatus::Validation,
        Error::Config(_) | Error::InvalidInput(_) | Error::ChannelNotFound(_) | Error::ClassNotFound(_) => {
            FrpcStatus::InvalidArgument
        }
        _ => FrpcStatus::Analysis,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), FrpcStatus>) -> FrpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FrpcStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            FrpcStatus::Panic
        }
    }
}

fn fail(e: Error) -> FrpcStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> FrpcStatus {
    set_error(format!("{what} is null"));
    FrpcStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FrpcStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FrpcStatus::InvalidUtf8
    })
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, FrpcStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, FrpcStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next frpc call on the same thread.
#[no_mangle]
pub extern "C" fn frpc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn frpc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Read an EpochSet from a manifest path or its directory.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frpc_epochset_read(
    path: *const c_char,
    out: *mut *mut FrpcEpochSet,
) -> FrpcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let set = read_epochset(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(FrpcEpochSet { inner: set }));
        Ok(())
    })
}

/// Write `set` into directory `dir`.
///
/// # Safety
/// `set` must come from this library; `dir` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn frpc_epochset_write(set: *const FrpcEpochSet, dir: *const c_char) -> FrpcStatus {
    guard(|| {
        let set = obj(set, "set")?;
        let dir = str_arg(dir, "dir")?;
        write_epochset(&set.inner, Path::new(dir)).map_err(fail)?;
        Ok(())
    })
}

/// Dimensions and sampling rate. Any output pointer may be null.
///
/// # Safety
/// `set` must come from this library; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn frpc_epochset_dims(
    set: *const FrpcEpochSet,
    n_trials: *mut usize,
    n_channels: *mut usize,
    n_samples: *mut usize,
    fs_hz: *mut f64,
) -> FrpcStatus {
    guard(|| {
        let s = &obj(set, "set")?.inner;
        if let Some(p) = n_trials.as_mut() {
            *p = s.n_trials;
        }
        if let Some(p) = n_channels.as_mut() {
            *p = s.n_channels();
        }
        if let Some(p) = n_samples.as_mut() {
            *p = s.n_samples;
        }
        if let Some(p) = fs_hz.as_mut() {
            *p = s.fs_hz;
        }
        Ok(())
    })
}

/// Copy one trial/channel signal into `buf` (`len` must be at least `n_samples`).
///
/// # Safety
/// `set` must come from this library; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn frpc_epochset_signal(
    set: *const FrpcEpochSet,
    trial: usize,
    channel: usize,
    buf: *mut f64,
    len: usize,
) -> FrpcStatus {
    guard(|| {
        let s = &obj(set, "set")?.inner;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if trial >= s.n_trials || channel >= s.n_channels() || len < s.n_samples {
            set_error(format!(
                "trial {trial}/channel {channel}/len {len} out of range for {}x{}x{}",
                s.n_trials,
                s.n_channels(),
                s.n_samples
            ));
            return Err(FrpcStatus::InvalidArgument);
        }
        std::slice::from_raw_parts_mut(buf, s.n_samples).copy_from_slice(s.signal(trial, channel));
        Ok(())
    })
}

/// # Safety
/// `set` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn frpc_epochset_free(set: *mut FrpcEpochSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Two-class synthetic subject ("left"/"right", channels C3, Cz, C4, 250 Hz)
/// with "left" band power on C3 in 8-12 Hz multiplied by `multiplier`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frpc_synth_oracle(
    seed: u64,
    trials_per_class: usize,
    multiplier: f64,
    out: *mut *mut FrpcEpochSet,
) -> FrpcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let mut spec = SynthSpec {
            seed,
            trials_per_class,
            ..Default::default()
        };
        if multiplier != 1.0 {
            spec = spec.with_effect("left", "C3", BandSpec::new(8.0, 12.0), multiplier);
        }
        let set = generate(&spec).map_err(fail)?;
        *out = Box::into_raw(Box::new(FrpcEpochSet { inner: set }));
        Ok(())
    })
}

/// Full pipeline on a two-class set. `config_toml` may be null for defaults.
///
/// # Safety
/// `set` must come from this library; `config_toml` null or a
/// nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frpc_analyze(
    set: *const FrpcEpochSet,
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut FrpcReport,
) -> FrpcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let set = obj(set, "set")?;
        let cfg = if config_toml.is_null() {
            PipelineConfig::default()
        } else {
            PipelineConfig::from_toml(str_arg(config_toml, "config_toml")?).map_err(fail)?
        };
        let inner = analyze(&set.inner, &cfg, seed).map_err(fail)?;
        let channel = CString::new(inner.cv.selected_channel.replace('\0', " ")).expect("no nul");
        *out = Box::into_raw(Box::new(FrpcReport { inner, channel }));
        Ok(())
    })
}

/// Best number of bands and its mean accuracy (%). Either output may be null.
///
/// # Safety
/// `report` must come from this library; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn frpc_report_best(
    report: *const FrpcReport,
    best_n: *mut usize,
    accuracy: *mut f64,
) -> FrpcStatus {
    guard(|| {
        let cv = &obj(report, "report")?.inner.cv;
        if let Some(p) = best_n.as_mut() {
            *p = cv.best_n;
        }
        if let Some(p) = accuracy.as_mut() {
            *p = cv.best().mean;
        }
        Ok(())
    })
}

/// Mean and standard deviation (%) for `n` bands.
///
/// # Safety
/// `report` must come from this library; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn frpc_report_accuracy(
    report: *const FrpcReport,
    n: usize,
    mean: *mut f64,
    std: *mut f64,
) -> FrpcStatus {
    guard(|| {
        let cv = &obj(report, "report")?.inner.cv;
        let mean = out_ptr(mean, "mean")?;
        let std = out_ptr(std, "std")?;
        let Some(r) = cv.per_n.iter().find(|r| r.n == n) else {
            set_error(format!("no result for n = {n}"));
            return Err(FrpcStatus::InvalidArgument);
        };
        *mean = r.mean;
        *std = r.std;
        Ok(())
    })
}

/// Selected channel name, owned by the report.
///
/// # Safety
/// `report` must come from this library (or be null, giving null).
#[no_mangle]
pub unsafe extern "C" fn frpc_report_channel(report: *const FrpcReport) -> *const c_char {
    match report.as_ref() {
        Some(r) => r.channel.as_ptr(),
        None => ptr::null(),
    }
}

/// The whole report as JSON; free with [`frpc_string_free`].
///
/// # Safety
/// `report` must come from this library; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frpc_report_json(report: *const FrpcReport, out: *mut *mut c_char) -> FrpcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let r = obj(report, "report")?;
        *out = CString::new(r.inner.to_json()).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn frpc_report_free(report: *mut FrpcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library (or be null).
#[no_mangle]
pub unsafe extern "C" fn frpc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
