//! Shared signal-processing primitives: biquad sections, zero-phase
//! filtering, Butterworth band-pass design, Welch periodograms and the
//! population statistics used by every scoring step.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Floor applied before taking the log of a variance or power.
pub const LOG_FLOOR: f64 = 1e-12;

/// Normalized second-order section, `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Notch at `f0` Hz with quality factor `q`.
    pub fn notch(f0: f64, q: f64, fs: f64) -> Biquad {
        let w0 = 2.0 * PI * f0 / fs;
        let alpha = w0.sin() / (2.0 * q);
        let cw = w0.cos();
        let a0 = 1.0 + alpha;
        Biquad {
            b0: 1.0 / a0,
            b1: -2.0 * cw / a0,
            b2: 1.0 / a0,
            a1: -2.0 * cw / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Direct form II transposed, in place, zero initial state.
    pub fn process(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b0 * input + s1;
            s1 = self.b1 * input - self.a1 * y + s2;
            s2 = self.b2 * input - self.a2 * y;
            *v = y;
        }
    }

    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Largest pole magnitude.
    pub fn pole_radius(&self) -> f64 {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        let p1 = (-self.a1 + disc) / 2.0;
        let p2 = (-self.a1 - disc) / 2.0;
        p1.norm().max(p2.norm())
    }
}

/// Value at index `i` of `x` extended by point (odd) reflection about each
/// end sample, repeated as often as needed.
fn odd_extend(x: &[f64], i: i64) -> f64 {
    let n = x.len() as i64;
    if n == 1 {
        return x[0];
    }
    if (0..n).contains(&i) {
        return x[i as usize];
    }
    if i < 0 {
        2.0 * x[0] - odd_extend(x, -i)
    } else {
        2.0 * x[(n - 1) as usize] - odd_extend(x, 2 * (n - 1) - i)
    }
}

/// Extend `x` by `pad` samples on each side using repeated point reflection.
pub fn odd_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len() as i64;
    let p = pad as i64;
    (-p..n + p).map(|i| odd_extend(x, i)).collect()
}

/// Whole-sample symmetric index (`x[-1] == x[0]`), periodic with period `2n`.
pub fn symmetric_index(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Forward-backward application of a cascade of sections, with `pad` samples
/// of odd extension on both sides. Output has the length of `x` and zero phase.
pub fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut buf = odd_pad(x, pad);
    for s in sections {
        s.process(&mut buf);
    }
    buf.reverse();
    for s in sections {
        s.process(&mut buf);
    }
    buf.reverse();
    buf[pad..pad + x.len()].to_vec()
}

/// Padding long enough for the slowest pole of `sections` to decay below 1e-9.
pub fn settle_length(sections: &[Biquad]) -> usize {
    let r = sections
        .iter()
        .map(Biquad::pole_radius)
        .fold(0.0_f64, f64::max)
        .min(1.0 - 1e-9);
    ((1e-9_f64).ln() / r.ln()).ceil() as usize
}

/// 4th-order Butterworth band-pass (2nd-order prototype) as two sections,
/// unit gain at the geometric center frequency.
pub fn butterworth_bandpass(lo: f64, hi: f64, fs: f64) -> Vec<Biquad> {
    let t = 2.0 * fs;
    let w1 = t * (PI * lo / fs).tan();
    let w2 = t * (PI * hi / fs).tan();
    let w0_sq = w1 * w2;
    let bw = w2 - w1;
    let center = 2.0 * (w0_sq.sqrt() / t).atan() * fs / (2.0 * PI);

    // upper-half-plane prototype pole of the 2nd-order Butterworth low-pass
    let p = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
    let disc = (p * p * bw * bw - 4.0 * w0_sq).sqrt();
    let analog = [(p * bw + disc) / 2.0, (p * bw - disc) / 2.0];

    analog
        .iter()
        .map(|&s| {
            let z = (t + s) / (t - s);
            let mut sec = Biquad {
                b0: 1.0,
                b1: 0.0,
                b2: -1.0,
                a1: -2.0 * z.re,
                a2: z.norm_sqr(),
            };
            let g = sec.response(center, fs).norm();
            sec.b0 /= g;
            sec.b2 /= g;
            sec
        })
        .collect()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/N) variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// `ln(max(variance, 1e-12))`.
pub fn log_variance(x: &[f64]) -> f64 {
    variance(x).max(LOG_FLOOR).ln()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Welch power spectral density (one-sided, density scaling, Hann window,
/// per-segment mean removal). Falls back to a single segment covering the
/// whole signal when it is shorter than `segment`.
///
/// Returns `(frequencies, psd)`.
pub fn welch(x: &[f64], fs: f64, segment: usize, overlap: usize) -> (Vec<f64>, Vec<f64>) {
    let seg = segment.min(x.len()).max(1);
    let step = seg.saturating_sub(overlap.min(seg.saturating_sub(1))).max(1);
    let window: Vec<f64> = if seg == 1 {
        vec![1.0]
    } else {
        // periodic Hann
        (0..seg)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos())
            .collect()
    };
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let n_bins = seg / 2 + 1;
    let mut psd = vec![0.0; n_bins];

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(seg);
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    let mut n_seg = 0usize;
    let mut start = 0usize;
    while start + seg <= x.len() {
        let chunk = &x[start..start + seg];
        let m = mean(chunk);
        for (b, (v, w)) in buf.iter_mut().zip(chunk.iter().zip(&window)) {
            *b = Complex64::new((v - m) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            *p += buf[k].norm_sqr();
        }
        n_seg += 1;
        start += step;
    }
    let scale = 1.0 / (fs * wss * n_seg.max(1) as f64);
    for (k, p) in psd.iter_mut().enumerate() {
        *p *= scale;
        let edge = k == 0 || (seg % 2 == 0 && k == seg / 2);
        if !edge {
            *p *= 2.0;
        }
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / seg as f64).collect();
    (freqs, psd)
}

/// Rectangle-rule integral of a PSD over `[lo, hi]` Hz (inclusive bins).
pub fn band_power(freqs: &[f64], psd: &[f64], lo: f64, hi: f64) -> f64 {
    let df = if freqs.len() > 1 {
        freqs[1] - freqs[0]
    } else {
        1.0
    };
    freqs
        .iter()
        .zip(psd)
        .filter(|(f, _)| **f >= lo - 1e-9 && **f <= hi + 1e-9)
        .map(|(_, p)| p * df)
        .sum()
}

/// Pearson correlation coefficient; 0 when either input is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f64, fs: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * f * i as f64 / fs + phase).sin())
            .collect()
    }

    #[test]
    fn notch_has_unit_dc_gain_and_null_at_center() {
        let q = Biquad::notch(50.0, 30.0, 250.0);
        assert!((q.response(0.0, 250.0).norm() - 1.0).abs() < 1e-12);
        assert!(q.response(50.0, 250.0).norm() < 1e-12);
    }

    #[test]
    fn odd_pad_continues_linear_ramps() {
        let x: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let p = odd_pad(&x, 12);
        for (k, v) in p.iter().enumerate() {
            assert!((v - (k as f64 - 12.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_index_mirrors() {
        let idx: Vec<usize> = (-4..8).map(|i| symmetric_index(i, 3)).collect();
        assert_eq!(idx, vec![2, 2, 1, 0, 0, 1, 2, 2, 1, 0, 0, 1]);
    }

    #[test]
    fn butterworth_passes_center_and_rejects_far() {
        let fs = 250.0;
        let secs = butterworth_bandpass(8.0, 12.0, fs);
        let g = |f: f64| secs.iter().map(|s| s.response(f, fs).norm()).product::<f64>();
        assert!((g(9.798) - 1.0).abs() < 0.01);
        assert!((g(8.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
        assert!((g(12.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
        assert!(g(20.0) < 0.1);
        assert!(g(0.5) < 0.01);
    }

    #[test]
    fn filtfilt_is_zero_phase() {
        let fs = 250.0;
        let x = sine(10.0, fs, 1000, 0.3);
        let y = filtfilt(&butterworth_bandpass(8.0, 12.0, fs), &x, 300);
        let mid = &y[200..800];
        let xm = &x[200..800];
        let err = mid
            .iter()
            .zip(xm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn welch_recovers_sinusoid_power() {
        let fs = 250.0;
        let x = sine(20.0, fs, 500, 0.0);
        let (f, p) = welch(&x, fs, 250, 125);
        let bp = band_power(&f, &p, 16.0, 24.0);
        assert!((bp - 0.5).abs() < 0.01, "{bp}");
        let (f1, p1) = welch(&x[..100], fs, 250, 125);
        assert_eq!(f1.len(), 51);
        assert!(p1.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn stats() {
        assert_eq!(variance(&[1.0, 1.0, 3.0, 3.0]), 1.0);
        assert_eq!(log_variance(&[0.0; 10]), LOG_FLOOR.ln());
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
    }
}
