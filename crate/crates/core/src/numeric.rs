//! Deterministic reductions.
//!
//! Every sum that feeds a reported number goes through a fixed-shape pairwise
//! tree so results do not depend on thread scheduling.

use num_complex::Complex64;

const BLOCK: usize = 32;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `lo..hi`, without materialising the terms.
pub fn pairwise_sum_by(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
    if hi - lo <= BLOCK {
        return (lo..hi).map(f).sum();
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
}

pub fn pairwise_sum_complex_by(lo: usize, hi: usize, f: &impl Fn(usize) -> Complex64) -> Complex64 {
    if hi - lo <= BLOCK {
        return (lo..hi).map(f).sum();
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum_complex_by(lo, mid, f) + pairwise_sum_complex_by(mid, hi, f)
}

/// Order-free sum: sorts a copy first, so any permutation of the input gives
/// a bitwise-identical result.
pub fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    pairwise_sum(&sorted)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    order_free_sum(values) / values.len() as f64
}

/// Unbiased (n - 1) sample variance with order-free accumulation.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    order_free_sum(&sq) / (n - 1) as f64
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rss, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let syy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let sxx = pairwise_sum(&sxx);
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .collect();
    let rss = pairwise_sum(&res);
    let tss = pairwise_sum(&syy);
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    (intercept, slope, rss, r2)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
