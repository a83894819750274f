//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use frpc::features::FeatureMatrix;

/// Two-pass population statistics, written independently of the library.
pub fn oracle_quotient(own: &[f64], pooled: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
    };
    let den = var(own) + var(pooled);
    if den == 0.0 {
        0.0
    } else {
        (mean(own) - mean(pooled)).powi(2) / den
    }
}

pub fn oracle_log_variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64)
        .max(1e-12)
        .ln()
}

/// Relative closeness at 1e-9, absolute near zero.
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Minimum weighted error over every (feature, midpoint, polarity), by
/// direct summation.
pub fn brute_force_min_error(x: &FeatureMatrix, y: &[f64], w: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for j in 0..x.n_cols {
        let mut v = x.column(j);
        v.sort_by(f64::total_cmp);
        v.dedup();
        for pair in v.windows(2) {
            let thr = (pair[0] + pair[1]) / 2.0;
            for pol in [1.0, -1.0] {
                let err: f64 = (0..x.n_rows)
                    .filter(|&i| (if x.get(i, j) > thr { pol } else { -pol }) != y[i])
                    .map(|i| w[i])
                    .sum();
                best = Some(best.map_or(err, |b: f64| b.min(err)));
            }
        }
    }
    best
}

/// ±1 targets with "b" as the positive class.
pub fn targets(x: &FeatureMatrix) -> Vec<f64> {
    x.labels
        .iter()
        .map(|l| if l == "b" { 1.0 } else { -1.0 })
        .collect()
}
