// FastICA (symmetric decorrelation, logcosh contrast) on trials concatenated
// along time, with kurtosis-based component rejection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::{IcaComponents, PreprocessConfig};
use crate::epochset::EpochSet;
use crate::error::{Error, Result};
use crate::rng;

pub const MAX_ITER: usize = 500;
pub const TOLERANCE: f64 = 1e-6;
const RANK_RATIO: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IcaModel {
    pub mean: DVector<f64>,
    /// `k × c`, maps centered data to whitened coordinates.
    pub whitening: DMatrix<f64>,
    /// `k × k`, orthogonal.
    pub unmixing: DMatrix<f64>,
    /// `c × k`, columns are component topographies.
    pub mixing: DMatrix<f64>,
    pub iterations: usize,
}

impl IcaModel {
    pub fn sources(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let centered = center(x, &self.mean);
        &self.unmixing * (&self.whitening * centered)
    }
}

fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        col -= mean;
    }
    c
}

/// `(W Wᵀ)^{-1/2} W`
fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.max(1e-300).sqrt()));
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * w
}

/// Fit FastICA to `x` (`channels × time`), keeping `n_components` whitened
/// dimensions.
pub fn fast_ica(x: &DMatrix<f64>, n_components: usize, seed: u64) -> Result<IcaModel> {
    let (c, n) = x.shape();
    if c < 2 || n < 2 {
        return Err(Error::InvalidInput(format!(
            "ICA needs at least 2 channels and 2 samples, got {c} x {n}"
        )));
    }
    let k = n_components.clamp(1, c);
    let mean = x.column_mean();
    let xc = center(x, &mean);
    let cov = &xc * xc.transpose() / n as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let kth = eig.eigenvalues[order[k - 1]];
    if !(top > 0.0) || kth / top < RANK_RATIO {
        return Err(Error::RankDeficient {
            ratio: if top > 0.0 { kth / top } else { 0.0 },
        });
    }
    let mut whitening = DMatrix::zeros(k, c);
    let mut dewhitening = DMatrix::zeros(c, k);
    for (row, &idx) in order.iter().take(k).enumerate() {
        let d = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx);
        whitening.row_mut(row).copy_from(&(v.transpose() / d.sqrt()));
        dewhitening.column_mut(row).copy_from(&(v * d.sqrt()));
    }
    let z = &whitening * &xc;

    let mut rng = rng::stream(seed, 0x1CA);
    let init = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let wz = &w * &z;
        let g = wz.map(f64::tanh);
        let g_prime_mean = DVector::from_iterator(
            k,
            g.row_iter()
                .map(|r| r.iter().map(|v| 1.0 - v * v).sum::<f64>() / n as f64),
        );
        let w_new = &g * z.transpose() / n as f64 - DMatrix::from_diagonal(&g_prime_mean) * &w;
        let w_new = symmetric_decorrelation(&w_new);
        let lim = (&w_new * w.transpose())
            .diagonal()
            .iter()
            .map(|v| (v.abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IcaNotConverged { iterations });
    }

    let mixing = &dewhitening * w.transpose();
    Ok(IcaModel {
        mean,
        whitening,
        unmixing: w,
        mixing,
        iterations,
    })
}

/// Population excess kurtosis, `m4 / m2² − 3`.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

/// Decompose all channels over the concatenated trials, zero every component
/// whose excess kurtosis exceeds `cfg.ica_reject_kurtosis`, and re-epoch.
/// Identity when ICA is disabled.
pub fn ica_clean(set: &EpochSet, cfg: &PreprocessConfig, seed: u64) -> Result<EpochSet> {
    if !cfg.ica_enabled {
        return Ok(set.clone());
    }
    let c = set.n_channels();
    let len = set.n_samples;
    let total = set.n_trials * len;
    let x = DMatrix::from_fn(c, total, |ch, i| set.signal(i / len, ch)[i % len]);
    let k = match cfg.ica_components {
        IcaComponents::Count(k) => k,
        IcaComponents::All(_) => c,
    };
    let model = fast_ica(&x, k, seed)?;
    let sources = model.sources(&x);

    let mut cleaned = x;
    for (j, row) in sources.row_iter().enumerate() {
        let s: Vec<f64> = row.iter().copied().collect();
        let kurt = excess_kurtosis(&s);
        if kurt > cfg.ica_reject_kurtosis {
            log::info!("ICA: removing component {j} (excess kurtosis {kurt:.2})");
            cleaned -= model.mixing.column(j) * row;
        }
    }

    let mut out = set.clone();
    for t in 0..set.n_trials {
        for ch in 0..c {
            let dst = out.signal_mut(t, ch);
            for (i, v) in dst.iter_mut().enumerate() {
                *v = cleaned[(ch, t * len + i)];
            }
        }
    }
    Ok(out)
}
