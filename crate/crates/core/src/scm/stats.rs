// SPDX-License-Identifier: MIT
//! Small numeric helpers shared by the CI tests and the monitors.

use nalgebra::{DMatrix, DVector};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sum of squared deviations from the mean (two-pass).
pub fn sum_sq_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Pearson correlation; `None` for fewer than two points or a constant column.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "columns must have equal length");
    if xs.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    pearson(&ranks(xs), &ranks(ys))
}

/// Assigns each value to one of `bins` equal-frequency bins (by rank, so ties
/// may straddle a boundary). Labels are `0..bins`.
pub fn quantile_bins(xs: &[f64], bins: usize) -> Vec<usize> {
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    let r = ranks(xs);
    r.iter()
        .map(|rank| {
            let b = ((rank - 1.0) * bins as f64 / n as f64).floor() as usize;
            b.min(bins - 1)
        })
        .collect()
}

/// Correlation of `xs` and `ys` after centering both within each stratum.
/// `None` when the pooled within-stratum variance of either column is zero.
pub fn pooled_within_correlation(xs: &[f64], ys: &[f64], strata: &[usize]) -> Option<f64> {
    let k = strata.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
    for ((x, y), &s) in xs.iter().zip(ys).zip(strata) {
        sums[s].0 += x;
        sums[s].1 += y;
        sums[s].2 += 1;
    }
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for ((x, y), &s) in xs.iter().zip(ys).zip(strata) {
        let c = sums[s].2 as f64;
        let dx = x - sums[s].0 / c;
        let dy = y - sums[s].1 / c;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let scale = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().max(f64::MIN_POSITIVE);
    // guard against round-off leaving a tiny positive variance in constant strata
    if sxx <= 1e-24 * scale(xs) || syy <= 1e-24 * scale(ys) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Residuals of an ordinary least-squares regression of `y` on an intercept
/// and the columns `zs`. `None` if the design is rank deficient.
pub fn residuals(y: &[f64], zs: &[&[f64]]) -> Option<Vec<f64>> {
    let n = y.len();
    let my = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    if zs.is_empty() {
        return Some(yc);
    }
    let k = zs.len();
    // centering the regressors absorbs the intercept
    let means: Vec<f64> = zs.iter().map(|z| mean(z)).collect();
    let design = DMatrix::from_fn(n, k, |i, j| zs[j][i] - means[j]);
    let target = DVector::from_vec(yc.clone());
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-12 * max_diag.max(f64::MIN_POSITIVE)) || max_diag == 0.0
    {
        return None;
    }
    let qty = qr.q().transpose() * &target;
    let beta = r.solve_upper_triangular(&qty)?;
    let fitted = design * beta;
    Some(yc.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect())
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
