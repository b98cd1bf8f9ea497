//! Two-sample comparisons for seed ensembles.
//!
//! The t-distribution tail is evaluated in log space through the regularized
//! incomplete beta function, so p-values far below `f64::MIN_POSITIVE` keep
//! a meaningful logarithm.

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::numeric::{mean, sample_variance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n_samples: usize,
    pub mean: f64,
    pub unbiased_variance: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 samples, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(SampleSummary {
            n_samples: values.len(),
            mean: mean(values),
            unbiased_variance: sample_variance(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `ln I_x(a, b)`, the log of the regularized incomplete beta function.
pub fn ln_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let front = |x: f64, a: f64, b: f64| a * x.ln() + b * (-x).ln_1p() - a.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        front(x, a, b) + beta_cf(x, a, b).ln()
    } else {
        let other = (front(1.0 - x, b, a) + beta_cf(1.0 - x, b, a).ln()).exp();
        (-other).ln_1p()
    }
}

/// `ln P(|T| >= t)` for Student's t with `dof` degrees of freedom.
pub fn ln_t_two_sided(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let t2 = t * t;
    ln_incomplete_beta(dof / (dof + t2), dof / 2.0, 0.5)
}

/// `ln P(T >= t)`.
pub fn ln_t_sf(t: f64, dof: f64) -> f64 {
    let half = ln_t_two_sided(t, dof) - std::f64::consts::LN_2;
    if t >= 0.0 {
        half
    } else {
        (-half.exp()).ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    pub p_two_sided: f64,
    pub ln_p_two_sided: f64,
    /// One-sided p for the alternative `mean(a) < mean(b)`.
    pub p_less: f64,
    pub ln_p_less: f64,
    /// Both samples have zero variance.
    pub degenerate: bool,
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    let sa = SampleSummary::new(a)?;
    let sb = SampleSummary::new(b)?;
    let va = sa.unbiased_variance / sa.n_samples as f64;
    let vb = sb.unbiased_variance / sb.n_samples as f64;
    let se2 = va + vb;
    let diff = sa.mean - sb.mean;
    if se2 == 0.0 {
        let (t, ln_p, ln_less) = if diff == 0.0 {
            (0.0, 0.0, -std::f64::consts::LN_2)
        } else if diff < 0.0 {
            (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY)
        };
        let dof = (sa.n_samples + sb.n_samples - 2) as f64;
        return Ok(WelchResult {
            t,
            dof,
            p_two_sided: ln_p.exp(),
            ln_p_two_sided: ln_p,
            p_less: ln_less.exp(),
            ln_p_less: ln_less,
            degenerate: true,
        });
    }
    let t = diff / se2.sqrt();
    let dof = se2 * se2
        / (va * va / (sa.n_samples - 1) as f64 + vb * vb / (sb.n_samples - 1) as f64);
    let ln_p = ln_t_two_sided(t, dof).min(0.0);
    let ln_less = ln_t_sf(-t, dof).min(0.0);
    Ok(WelchResult {
        t,
        dof,
        p_two_sided: ln_p.exp(),
        ln_p_two_sided: ln_p,
        p_less: ln_less.exp(),
        ln_p_less: ln_less,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitneyResult {
    /// `U` for sample `a`: pairs with `a > b`, ties counting one half.
    pub u: f64,
    pub p_two_sided: f64,
    pub method: MwMethod,
}

/// Largest sample size (for both samples) that uses exact enumeration.
pub const MW_EXACT_MAX: usize = 8;

/// Mid-ranks of `values` (1-based).
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && values[idx[e + 1]] == values[idx[k]] {
            e += 1;
        }
        let r = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            ranks[i] = r;
        }
        k = e + 1;
    }
    ranks
}

/// Rank-sum test. Uses the exact permutation distribution (ties included)
/// when both samples have at most [`MW_EXACT_MAX`] values, otherwise the
/// tie-corrected normal approximation with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitneyResult> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::InsufficientData("both samples must be non-empty".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let r1: f64 = ranks[..m].iter().sum();
    let u1 = r1 - (m * (m + 1)) as f64 / 2.0;
    let mn = (m * n) as f64;
    if m <= MW_EXACT_MAX && n <= MW_EXACT_MAX {
        // Distribution of twice the rank sum over all size-m subsets.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max_sum: usize = doubled.iter().sum();
        let mut dp = vec![vec![0.0f64; max_sum + 1]; m + 1];
        dp[0][0] = 1.0;
        for &r in &doubled {
            for k in (1..=m).rev() {
                for s in (r..=max_sum).rev() {
                    dp[k][s] += dp[k - 1][s - r];
                }
            }
        }
        let total: f64 = dp[m].iter().sum();
        let observed = (2.0 * r1).round() as usize;
        let le: f64 = dp[m][..=observed].iter().sum::<f64>() / total;
        let ge: f64 = dp[m][observed..].iter().sum::<f64>() / total;
        return Ok(MannWhitneyResult { u: u1, p_two_sided: (2.0 * le.min(ge)).min(1.0), method: MwMethod::Exact });
    }
    let big_n = (m + n) as f64;
    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let mut e = k;
        while e + 1 < sorted.len() && sorted[e + 1] == sorted[k] {
            e += 1;
        }
        let t = (e - k + 1) as f64;
        tie_term += t * t * t - t;
        k = e + 1;
    }
    let var = mn / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitneyResult { u: u1, p_two_sided: 1.0, method: MwMethod::Normal });
    }
    let u = u1.max(mn - u1);
    let z = (u - mn / 2.0 - 0.5) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitneyResult { u: u1, p_two_sided: p, method: MwMethod::Normal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const A: [f64; 15] = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
    const B: [f64; 15] = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 30.6, 24.4];

    #[test]
    fn summary() {
        let s = SampleSummary::new(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.n_samples, s.mean, s.min, s.max), (4, 2.5, 1.0, 4.0));
        assert_relative_eq!(s.unbiased_variance, 5.0 / 3.0, max_relative = 1e-15);
        assert!(SampleSummary::new(&[1.0]).is_err());
    }

    // Reference values below come from scipy.stats 1.15.
    #[test]
    fn welch_fixture() {
        let r = welch_t_test(&A, &B).unwrap();
        assert_relative_eq!(r.t, -2.8501975193450355, max_relative = 1e-12);
        assert_relative_eq!(r.dof, 27.910784527541374, max_relative = 1e-12);
        assert_relative_eq!(r.p_two_sided, 0.008122473821458438, max_relative = 1e-10);
        assert_relative_eq!(r.p_less, 0.004061236910729219, max_relative = 1e-10);
        assert!(!r.degenerate);
    }

    #[test]
    fn welch_identical_samples() {
        let r = welch_t_test(&A, &A).unwrap();
        assert_eq!(r.t, 0.0);
        assert_relative_eq!(r.p_two_sided, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn welch_jittered_constants() {
        let a = [0.0, 1e-9, -1e-9, 2e-9];
        let b = [1.0 + 1e-9, 1.0, 1.0 - 2e-9, 1.0 + 1e-9];
        let r = welch_t_test(&a, &b).unwrap();
        assert!(r.p_two_sided < 1e-10);
        assert_relative_eq!(r.t, -1044465909.1575027, max_relative = 1e-6);
        assert_relative_eq!(r.dof, 5.950819623460771, max_relative = 1e-6);
        assert_relative_eq!(r.p_two_sided, 1.3531939952782964e-52, max_relative = 1e-5);
    }

    #[test]
    fn welch_degenerate() {
        let r = welch_t_test(&[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!(r.degenerate && r.p_two_sided == 1.0 && r.t == 0.0);
        let r = welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert!(r.degenerate && r.p_two_sided == 0.0 && r.t == f64::NEG_INFINITY);
        assert_eq!(r.p_less, 1.0);
        assert!(welch_t_test(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn t_tail_fixtures() {
        assert_relative_eq!(ln_t_sf(40.0, 7.5).exp(), 2.559528381854895e-10, max_relative = 1e-10);
        assert_relative_eq!(ln_t_sf(1.3, 3.2).exp(), 0.1396590458471276, max_relative = 1e-12);
        assert_relative_eq!(ln_t_sf(0.1, 100.0).exp(), 0.4602722655479256, max_relative = 1e-12);
        assert_relative_eq!(ln_t_sf(5.0, 1.0).exp(), 0.06283295818900117, max_relative = 1e-12);
        assert_relative_eq!(ln_t_sf(400.0, 30.0), -131.35656905896133, max_relative = 1e-12);
        // p near 1e-209, below anything a plain f64 tail would keep.
        assert_relative_eq!(ln_t_sf(1e5, 50.0), -480.7256479381491, max_relative = 1e-12);
        assert!(ln_t_sf(1e5, 50.0) < (1e-200f64).ln());
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1 - x)^b.
        for x in [0.01, 0.3, 0.5, 0.9] {
            assert_relative_eq!(ln_incomplete_beta(x, 1.0, 1.0).exp(), x, max_relative = 1e-13);
            assert_relative_eq!(ln_incomplete_beta(x, 3.5, 1.0).exp(), x.powf(3.5), max_relative = 1e-13);
            assert_relative_eq!(ln_incomplete_beta(x, 1.0, 2.5).exp(), 1.0 - (1.0 - x).powf(2.5), max_relative = 1e-13);
        }
    }

    #[test]
    fn mann_whitney_fixtures() {
        let r = mann_whitney_u(&A, &B).unwrap();
        assert_eq!((r.u, r.method), (45.5, MwMethod::Normal));
        assert_relative_eq!(r.p_two_sided, 0.005788641486744119, max_relative = 1e-10);

        let r = mann_whitney_u(&[1.1, 2.2, 3.3, 4.4, 5.5], &[2.5, 3.5, 6.5, 7.5, 8.5, 9.5]).unwrap();
        assert_eq!((r.u, r.method), (5.0, MwMethod::Exact));
        assert_relative_eq!(r.p_two_sided, 0.08225108225108226, max_relative = 1e-12);

        let x = [1.0, 2.0, 2.0, 3.0, 4.0, 5.0, 5.0, 6.0, 7.0, 9.0];
        let y = [3.0, 4.0, 5.0, 5.0, 6.0, 8.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.u, 25.0);
        assert_relative_eq!(r.p_two_sided, 0.03677947584491104, max_relative = 1e-10);
    }

    #[test]
    fn mann_whitney_disjoint_and_equal() {
        let lo: Vec<f64> = (0..10).map(f64::from).collect();
        let hi: Vec<f64> = (10..20).map(f64::from).collect();
        let r = mann_whitney_u(&lo, &hi).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.p_two_sided < 1e-3);
        assert_relative_eq!(r.p_two_sided, 0.00018267179110955002, max_relative = 1e-10);
        assert_eq!(mann_whitney_u(&hi, &lo).unwrap().u, 100.0);
        // Exact oracle for 8 vs 8 disjoint: 2 / C(16, 8).
        let r = mann_whitney_u(&lo[..8], &hi[..8]).unwrap();
        assert_relative_eq!(r.p_two_sided, 2.0 / 12870.0, max_relative = 1e-12);
        assert_relative_eq!(mann_whitney_u(&A, &A).unwrap().p_two_sided, 1.0);
    }

    proptest! {
        #[test]
        fn welch_symmetry(a in prop::collection::vec(-10.0f64..10.0, 2..20), b in prop::collection::vec(-10.0f64..10.0, 2..20)) {
            let x = welch_t_test(&a, &b).unwrap();
            let y = welch_t_test(&b, &a).unwrap();
            prop_assert!(x.p_two_sided > 0.0 && x.p_two_sided <= 1.0);
            prop_assert!((x.t + y.t).abs() <= 1e-12 * x.t.abs().max(1.0));
            prop_assert!((x.p_two_sided - y.p_two_sided).abs() <= 1e-12);
        }

        #[test]
        fn log_tail_matches_direct(t in 0.0f64..30.0, dof in 1.0f64..200.0) {
            // Direct evaluation of the same continued fraction outside log space.
            let x = dof / (dof + t * t);
            let (a, b) = (dof / 2.0, 0.5);
            let direct = if x < (a + 1.0) / (a + b + 2.0) {
                (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() * beta_cf(x, a, b) / a
            } else {
                1.0 - (b * (1.0 - x).ln() + a * x.ln() - ln_beta(a, b)).exp() * beta_cf(1.0 - x, b, a) / b
            };
            let logged = ln_t_two_sided(t, dof).exp();
            prop_assume!(direct > 1e-280);
            prop_assert!((logged - direct).abs() <= 1e-12 * direct);
        }
    }
}
