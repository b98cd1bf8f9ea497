//! Numerical checks of the small-angle localization statements: operator
//! distance from the identity, overlap with the reference state, Hamming
//! weight concentration, frame potentials, and variance scaling fits.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{draw_unchecked, execute, execute_from_zero, execute_inverse, localization_budget, AnsatzSpec, Entangler, Family, InitSpec, ParameterVector};
use crate::gradient::VarianceScan;
use crate::numeric::{linear_fit, mean, pairwise_sum, pairwise_sum_complex_by};
use crate::statevector::{effective_dimension_from_mass, Statevector};
use crate::{rng, Complex64, Error, Result};

pub const MAX_DENSE_UNITARY_QUBITS: usize = 8;
pub const MAX_OP_NORM_QUBITS: usize = 10;
const BOUND_TOL: f64 = 1e-10;

/// Full `2^N x 2^N` circuit matrix; column `k` is `U |k>`.
pub fn circuit_unitary(spec: &AnsatzSpec, params: &ParameterVector) -> Result<DMatrix<Complex64>> {
    let n = spec.num_qubits();
    if n > MAX_DENSE_UNITARY_QUBITS {
        return Err(Error::InvalidSize(format!("dense unitary supports N <= {MAX_DENSE_UNITARY_QUBITS}, got {n}")));
    }
    let d = 1usize << n;
    let cols = (0..d)
        .map(|k| Ok(execute(spec, params, &Statevector::basis_state(n, k)?)?.amplitudes().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(d, d, |i, j| cols[j][i]))
}

/// `max |U^dagger U - I|` entrywise.
pub fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
    let d = u.nrows();
    let g = u.adjoint() * u - DMatrix::<Complex64>::identity(d, d);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value of `U - I`.
pub fn dense_deviation(u: &DMatrix<Complex64>) -> f64 {
    let d = u.nrows();
    let dev = u - DMatrix::<Complex64>::identity(d, d);
    dev.singular_values().iter().copied().fold(0.0, f64::max)
}

/// `||U - I||_op` without forming `U`: power iteration on
/// `(U - I)^dagger (U - I)` using forward and inverse circuit sweeps.
pub fn matrix_free_deviation(spec: &AnsatzSpec, params: &ParameterVector, seed: u64) -> Result<f64> {
    let n = spec.num_qubits();
    let mut r = rng::stream(seed, 0x0b);
    let mut x = Statevector::haar_random(n, &mut r)?;
    let apply = |x: &Statevector| -> Result<Vec<Complex64>> {
        // y = (U - I) x, then z = (U^dagger - I) y.
        let ux = execute(spec, params, x)?;
        let y: Vec<Complex64> = ux.amplitudes().iter().zip(x.amplitudes()).map(|(a, b)| a - b).collect();
        let ys = crate::statevector::Statevector::from_amplitudes_unchecked(n, y.clone());
        let uy = execute_inverse(spec, params, &ys)?;
        Ok(uy.amplitudes().iter().zip(&y).map(|(a, b)| a - b).collect())
    };
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let z = apply(&x)?;
        let rq = pairwise_sum_complex_by(0, z.len(), &|i| x.amplitudes()[i].conj() * z[i]).re;
        let resid = pairwise_sum_by_norm(&z, x.amplitudes(), rq);
        lambda = rq;
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if resid <= 1e-8 * rq.max(1e-300) {
            return Ok(lambda.max(0.0).sqrt());
        }
        x = Statevector::from_amplitudes_unchecked(n, z.into_iter().map(|c| c / norm).collect());
    }
    Err(Error::Convergence { iterations: 20_000, residual: lambda })
}

fn pairwise_sum_by_norm(z: &[Complex64], x: &[Complex64], rq: f64) -> f64 {
    pairwise_sum(&z.iter().zip(x).map(|(a, b)| (a - b * rq).norm_sqr()).collect::<Vec<_>>()).sqrt()
}

/// `||U - I||_op`: dense singular values up to 8 qubits, power iteration up to 10.
pub fn op_norm_deviation(spec: &AnsatzSpec, params: &ParameterVector) -> Result<f64> {
    let n = spec.num_qubits();
    if n <= MAX_DENSE_UNITARY_QUBITS {
        Ok(dense_deviation(&circuit_unitary(spec, params)?))
    } else if n <= MAX_OP_NORM_QUBITS {
        matrix_free_deviation(spec, params, 0)
    } else {
        Err(Error::InvalidSize(format!("operator norm supports N <= {MAX_OP_NORM_QUBITS}, got {n}")))
    }
}

/// `sum_k ||U_k - I||_op`: `2 |sin(theta/2)|` per rotation plus the fixed
/// gates' deviations.
pub fn triangle_bound(spec: &AnsatzSpec, params: &ParameterVector) -> f64 {
    let terms: Vec<f64> = spec
        .gates()
        .iter()
        .map(|g| match g.param_slot {
            Some(s) => 2.0 * (params.values()[s] / 2.0).sin().abs(),
            None => g.fixed_deviation(),
        })
        .collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub n: usize,
    pub l: usize,
    pub kappa: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub delta_theorem: f64,
    pub delta_sum: f64,
    /// `sum_k ||U_k - I||_op`.
    pub triangle_bound: f64,
    pub op_norm_dev: f64,
    pub fidelity_to_zero: f64,
    /// `1 - op_norm_dev^2`.
    pub fidelity_lower_bound: f64,
    pub hamming_fit_slope: f64,
    pub d_eff: u128,
    pub norm_bound_holds: bool,
    pub fidelity_bound_holds: bool,
    /// `false` when `delta_sum >= 2`, where both bounds are vacuous.
    pub localized: bool,
}

impl LocalizationReport {
    pub fn bounds_hold(&self) -> bool {
        self.norm_bound_holds && self.fidelity_bound_holds
    }
}

/// Least-squares slope of `ln mass_w` against `w` over `w = 1..=w_cut`,
/// skipping empty shells.
pub fn hamming_slope(mass: &[f64], w_cut: usize) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = (1..=w_cut.min(mass.len() - 1))
        .filter(|&w| mass[w] > 0.0)
        .map(|w| (w as f64, mass[w].ln()))
        .unzip();
    if x.len() < 2 {
        return f64::NEG_INFINITY;
    }
    linear_fit(&x, &y).1
}

pub const DEFAULT_MASS_CUTOFF: f64 = 1e-6;

pub fn verify_localization(spec: &AnsatzSpec, init: &InitSpec, seeds: &[u64]) -> Result<Vec<LocalizationReport>> {
    if spec.num_qubits() > MAX_DENSE_UNITARY_QUBITS {
        return Err(Error::InvalidSize(format!("localization check supports N <= {MAX_DENSE_UNITARY_QUBITS}")));
    }
    seeds
        .par_iter()
        .map(|&seed| {
            let params = draw_unchecked(spec, &init.with_seed(seed))?;
            localization_report(spec, &params, init.kappa, seed)
        })
        .collect()
}

pub fn localization_report(spec: &AnsatzSpec, params: &ParameterVector, kappa: f64, seed: u64) -> Result<LocalizationReport> {
    let budget = localization_budget(spec, params)?;
    let u = circuit_unitary(spec, params)?;
    let op_norm_dev = dense_deviation(&u).clamp(0.0, 2.0);
    let fidelity_to_zero = u[(0, 0)].norm_sqr().clamp(0.0, 1.0);
    let bound = triangle_bound(spec, params);
    let lower = 1.0 - op_norm_dev * op_norm_dev;
    let state = Statevector::from_amplitudes_unchecked(spec.num_qubits(), u.column(0).iter().copied().collect());
    let mass = state.hamming_mass();
    Ok(LocalizationReport {
        n: spec.num_qubits(),
        l: spec.num_layers(),
        kappa,
        seed,
        epsilon: budget.epsilon,
        delta_theorem: budget.delta,
        delta_sum: budget.sum_abs,
        triangle_bound: bound,
        op_norm_dev,
        fidelity_to_zero,
        fidelity_lower_bound: lower,
        hamming_fit_slope: hamming_slope(&mass, 5),
        d_eff: effective_dimension_from_mass(&mass, DEFAULT_MASS_CUTOFF)?,
        norm_bound_holds: op_norm_dev <= bound + BOUND_TOL && bound <= budget.sum_abs + spec_fixed_total(spec) + BOUND_TOL,
        fidelity_bound_holds: fidelity_to_zero + BOUND_TOL >= lower,
        localized: budget.sum_abs + spec_fixed_total(spec) < 2.0,
    })
}

fn spec_fixed_total(spec: &AnsatzSpec) -> f64 {
    spec.gates().iter().filter(|g| g.param_slot.is_none()).map(|g| g.fixed_deviation()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HammingDecayReport {
    pub n: usize,
    pub l: usize,
    pub kappa: f64,
    pub seeds: usize,
    /// Seed-averaged probability mass per Hamming weight.
    pub mean_mass: Vec<f64>,
    pub w_check: usize,
    /// `mean_mass[w] > mean_mass[w + 1]` for `w = 1..w_check`.
    pub strictly_decreasing: bool,
    pub fit_slope: f64,
    /// `sqrt(L) * sigma`, the typical accumulated single-qubit angle.
    pub eps_eff: f64,
    /// `2 ln(eps_eff) + ln N + 1`, a loose ceiling for the slope.
    pub slope_bound: f64,
    pub w_max: usize,
    pub d_eff: u128,
}

pub fn verify_hamming_decay(spec: &AnsatzSpec, init: &InitSpec, seeds: &[u64], w_check: usize) -> Result<HammingDecayReport> {
    if seeds.is_empty() {
        return Err(Error::InsufficientData("no seeds".into()));
    }
    let n = spec.num_qubits();
    let masses = seeds
        .par_iter()
        .map(|&s| Ok(execute_from_zero(spec, &draw_unchecked(spec, &init.with_seed(s))?)?.hamming_mass()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mean_mass: Vec<f64> = (0..=n).map(|w| mean(&masses.iter().map(|m| m[w]).collect::<Vec<_>>())).collect();
    let w_check = w_check.min(n);
    let strictly_decreasing = (1..w_check).all(|w| mean_mass[w] > mean_mass[w + 1]);
    let sigma = init.sigma(spec.num_layers(), n);
    let eps_eff = (spec.num_layers() as f64).sqrt() * sigma;
    let mut cumulative = 0.0;
    let w_max = mean_mass
        .iter()
        .position(|m| {
            cumulative += m;
            cumulative >= 1.0 - DEFAULT_MASS_CUTOFF
        })
        .unwrap_or(n);
    Ok(HammingDecayReport {
        n,
        l: spec.num_layers(),
        kappa: init.kappa,
        seeds: seeds.len(),
        fit_slope: hamming_slope(&mean_mass, w_check),
        slope_bound: 2.0 * eps_eff.ln() + (n as f64).ln() + 1.0,
        eps_eff,
        w_max,
        d_eff: effective_dimension_from_mass(&mean_mass, DEFAULT_MASS_CUTOFF)?,
        strictly_decreasing,
        mean_mass,
        w_check,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeffRow {
    pub n: usize,
    pub w_max: usize,
    pub d_eff: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeffScan {
    pub rows: Vec<DeffRow>,
    /// Slope of `ln d_eff` against `ln n`.
    pub log_log_slope: f64,
}

/// Effective dimension of the seed-averaged output across system sizes.
pub fn effective_dimension_scan(
    n_list: &[usize],
    l: usize,
    entangler: Entangler,
    init: &InitSpec,
    seeds: &[u64],
) -> Result<DeffScan> {
    let rows = n_list
        .iter()
        .map(|&n| {
            let spec = AnsatzSpec::build(Family::Heft, n, l, entangler)?;
            let r = verify_hamming_decay(&spec, init, seeds, 5)?;
            Ok(DeffRow { n, w_max: r.w_max, d_eff: r.d_eff })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.len() < 2 {
        return Err(Error::InsufficientData("need at least two sizes".into()));
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| (r.d_eff as f64).ln()).collect();
    Ok(DeffScan { log_log_slope: linear_fit(&x, &y).1, rows })
}

/// Unitary ensembles for frame-potential estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    Circuit { spec: AnsatzSpec, init: InitSpec },
    Haar { num_qubits: usize },
    Identity { num_qubits: usize },
}

impl Ensemble {
    pub fn num_qubits(&self) -> usize {
        match self {
            Ensemble::Circuit { spec, .. } => spec.num_qubits(),
            Ensemble::Haar { num_qubits } | Ensemble::Identity { num_qubits } => *num_qubits,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Ensemble::Circuit { spec, init } => match init.family {
                crate::ansatz::InitFamily::HeftGaussian => format!("heft(kappa={})", init.kappa),
                crate::ansatz::InitFamily::HeaUniform => format!("hea_uniform({})", spec.family.name()),
            },
            Ensemble::Haar { .. } => "haar_reference".into(),
            Ensemble::Identity { .. } => "identity".into(),
        }
    }

    fn sample(&self, seed: u64) -> Result<DMatrix<Complex64>> {
        match self {
            Ensemble::Circuit { spec, init } => circuit_unitary(spec, &draw_unchecked(spec, &init.with_seed(seed))?),
            Ensemble::Haar { num_qubits } => Ok(haar_unitary(1 << num_qubits, &mut rng::stream(seed, 0x4a))),
            Ensemble::Identity { num_qubits } => {
                let d = 1 << num_qubits;
                Ok(DMatrix::identity(d, d))
            }
        }
    }
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary(d: usize, r: &mut rng::Rng) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(r);
        let im: f64 = StandardNormal.sample(r);
        Complex64::new(re * s, im * s)
    });
    let qr = g.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..d {
        let z = rr[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|c| *c *= phase);
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FramePotentialReport {
    pub n: usize,
    pub l: Option<usize>,
    pub ensemble: String,
    pub num_samples: usize,
    pub frame_potential_t2: f64,
    pub stderr: f64,
}

impl FramePotentialReport {
    pub const HAAR_VALUE: f64 = 2.0;
}

/// Monte Carlo `E |Tr(U^dagger V)|^4` over independent pairs.
pub fn frame_potential_t2(ensemble: &Ensemble, num_pairs: usize, seed: u64) -> Result<FramePotentialReport> {
    if ensemble.num_qubits() > 6 {
        return Err(Error::InvalidSize("frame potential supports N <= 6".into()));
    }
    if num_pairs < 2 {
        return Err(Error::InsufficientData("need at least two pairs".into()));
    }
    let samples = (0..num_pairs)
        .into_par_iter()
        .map(|k| {
            let u = ensemble.sample(rng::derive_seed(&[seed, k as u64, 0]))?;
            let v = ensemble.sample(rng::derive_seed(&[seed, k as u64, 1]))?;
            let tr = pairwise_sum_complex_by(0, u.len(), &|i| u.as_slice()[i].conj() * v.as_slice()[i]);
            Ok(tr.norm_sqr().powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    let l = match ensemble {
        Ensemble::Circuit { spec, .. } => Some(spec.num_layers()),
        _ => None,
    };
    Ok(FramePotentialReport {
        n: ensemble.num_qubits(),
        l,
        ensemble: ensemble.label(),
        num_samples: num_pairs,
        frame_potential_t2: mean(&samples),
        stderr: (crate::numeric::sample_variance(&samples) / num_pairs as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    Exponential,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub family: Option<Family>,
    pub sizes: usize,
    /// `ln V = a - b n`.
    pub exp_intercept: f64,
    pub exp_rate: f64,
    pub exp_rss: f64,
    pub exp_r2: f64,
    /// `ln V = a - k ln n`.
    pub poly_intercept: f64,
    pub poly_degree: f64,
    pub poly_rss: f64,
    pub poly_r2: f64,
    pub winner: ScalingModel,
}

pub fn fit_scaling(ns: &[f64], variances: &[f64]) -> Result<ScalingFit> {
    if ns.len() != variances.len() || ns.len() < 4 {
        return Err(Error::InsufficientData(format!("scaling fit needs >= 4 sizes, got {}", ns.len())));
    }
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("variances must be positive to take logs".into()));
    }
    let y: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let ln_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let (ea, eb, erss, er2) = linear_fit(ns, &y);
    let (pa, pb, prss, pr2) = linear_fit(&ln_n, &y);
    Ok(ScalingFit {
        family: None,
        sizes: ns.len(),
        exp_intercept: ea,
        exp_rate: -eb,
        exp_rss: erss,
        exp_r2: er2,
        poly_intercept: pa,
        poly_degree: -pb,
        poly_rss: prss,
        poly_r2: pr2,
        winner: if erss < prss { ScalingModel::Exponential } else { ScalingModel::Polynomial },
    })
}

/// One fit per ansatz family present in the scan.
pub fn variance_lower_bound_check(scan: &VarianceScan) -> Result<Vec<ScalingFit>> {
    let mut families: Vec<Family> = scan.rows.iter().map(|r| r.family).collect();
    families.dedup();
    families
        .into_iter()
        .map(|f| {
            let rows: Vec<_> = scan.rows.iter().filter(|r| r.family == f).collect();
            let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
            let vs: Vec<f64> = rows.iter().map(|r| r.grad_var).collect();
            Ok(ScalingFit { family: Some(f), ..fit_scaling(&ns, &vs)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::draw_parameters;
    use crate::pauli::Pauli;
    use crate::statevector::{GateKind, GateOp};
    use approx::assert_abs_diff_eq;

    #[test]
    fn classical_circuits_at_zero_angle() {
        let cz = AnsatzSpec::build(Family::Heft, 3, 2, Entangler::CzLadder).unwrap();
        let u = circuit_unitary(&cz, &ParameterVector::zeros(cz.num_params())).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let z = u[(i, j)];
                if i == j {
                    assert!((z.re.abs() - 1.0).abs() < 1e-15 && z.im == 0.0);
                } else {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
        let cx = AnsatzSpec::build(Family::Heft, 3, 2, Entangler::CnotLadder).unwrap();
        let u = circuit_unitary(&cx, &ParameterVector::zeros(cx.num_params())).unwrap();
        for j in 0..8 {
            let col: Vec<f64> = u.column(j).iter().map(|z| z.norm()).collect();
            assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&v| v == 0.0).count(), 7);
        }
    }

    #[test]
    fn single_rotation_deviation() {
        let spec = AnsatzSpec::custom(
            Family::Heft,
            Entangler::CnotLadder,
            1,
            1,
            vec![GateOp::new(GateKind::Rx, vec![0], Some(0), 0).unwrap()],
        )
        .unwrap();
        let p = ParameterVector::new(vec![0.1]).unwrap();
        let d = op_norm_deviation(&spec, &p).unwrap();
        assert_abs_diff_eq!(d, 2.0 * 0.05f64.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(d, 0.0999583, epsilon = 1e-7);
    }

    #[test]
    fn unitarity() {
        let spec = AnsatzSpec::build(Family::Heft, 4, 3, Entangler::PauliZzRotation).unwrap();
        let p = draw_parameters(&spec, &InitSpec::heft(1.0, 3)).unwrap();
        assert!(unitarity_error(&circuit_unitary(&spec, &p).unwrap()) < 1e-9);
        let big = AnsatzSpec::build(Family::Heft, 9, 1, Entangler::CnotLadder).unwrap();
        assert!(matches!(circuit_unitary(&big, &ParameterVector::zeros(big.num_params())), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn matrix_free_matches_dense() {
        let spec = AnsatzSpec::build(Family::Heft, 5, 2, Entangler::PauliZzRotation).unwrap();
        let p = draw_parameters(&spec, &InitSpec::heft(3.0, 8)).unwrap();
        let dense = dense_deviation(&circuit_unitary(&spec, &p).unwrap());
        let free = matrix_free_deviation(&spec, &p, 1).unwrap();
        assert!((dense - free).abs() < 1e-6, "{dense} vs {free}");
    }

    #[test]
    fn zero_angles_are_exactly_localized() {
        let spec = AnsatzSpec::build(Family::Heft, 4, 2, Entangler::PauliZzRotation).unwrap();
        let r = localization_report(&spec, &ParameterVector::zeros(spec.num_params()), 1.0, 0).unwrap();
        assert_eq!((r.op_norm_dev, r.fidelity_to_zero), (0.0, 1.0));
        assert!(r.bounds_hold() && r.localized);
        assert_eq!(r.d_eff, 1);
    }

    #[test]
    fn bounds_hold_on_small_angles() {
        let spec = AnsatzSpec::build(Family::Heft, 4, 4, Entangler::PauliZzRotation).unwrap();
        let seeds: Vec<u64> = (0..20).collect();
        let reports = verify_localization(&spec, &InitSpec::heft(1.0, 0), &seeds).unwrap();
        assert!(reports.iter().all(|r| r.bounds_hold()));
        let tight = verify_localization(&spec, &InitSpec::heft(0.5, 0), &seeds).unwrap();
        assert!(tight.iter().all(|r| r.bounds_hold() && r.localized && r.fidelity_lower_bound > 0.0));
        for r in &reports {
            let psi = execute_from_zero(&spec, &draw_unchecked(&spec, &InitSpec::heft(1.0, r.seed)).unwrap()).unwrap();
            let f = psi.fidelity(&Statevector::zero_state(4).unwrap()).unwrap();
            assert_abs_diff_eq!(f, r.fidelity_to_zero, epsilon = 1e-10);
        }
    }

    #[test]
    fn large_angles_flagged() {
        let spec = AnsatzSpec::build(Family::Heft, 4, 2, Entangler::PauliZzRotation).unwrap();
        let reports = verify_localization(&spec, &InitSpec::heft(50.0, 0), &[0, 1, 2]).unwrap();
        assert!(reports.iter().all(|r| r.bounds_hold() && !r.localized));
    }

    #[test]
    fn hamming_shells_decay() {
        let spec = AnsatzSpec::build(Family::Heft, 6, 2, Entangler::PauliZzRotation).unwrap();
        let seeds: Vec<u64> = (0..30).collect();
        let r = verify_hamming_decay(&spec, &InitSpec::heft(0.5, 0), &seeds, 5).unwrap();
        assert!(r.strictly_decreasing);
        assert!(r.fit_slope < 0.0 && r.fit_slope <= r.slope_bound);
        assert_abs_diff_eq!(r.mean_mass.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_frame_potential() {
        // |Tr I|^4 = d^4 = 2^(4N).
        let r = frame_potential_t2(&Ensemble::Identity { num_qubits: 2 }, 10, 0).unwrap();
        assert_eq!(r.frame_potential_t2, 256.0);
        assert_eq!(r.stderr, 0.0);
        let r = frame_potential_t2(&Ensemble::Identity { num_qubits: 4 }, 2, 0).unwrap();
        assert_eq!(r.frame_potential_t2, 65536.0);
    }

    #[test]
    fn haar_frame_potential() {
        let u = haar_unitary(8, &mut rng::stream(1, 1));
        assert!(unitarity_error(&u) < 1e-12);
        let r = frame_potential_t2(&Ensemble::Haar { num_qubits: 2 }, 10_000, 7).unwrap();
        assert!((r.frame_potential_t2 - 2.0).abs() < 5.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn synthetic_scaling_fixtures() {
        let ns: Vec<f64> = [4.0, 6.0, 8.0, 10.0, 12.0].to_vec();
        let poly: Vec<f64> = ns.iter().map(|n: &f64| n.powi(-3)).collect();
        let f = fit_scaling(&ns, &poly).unwrap();
        assert_eq!(f.winner, ScalingModel::Polynomial);
        assert!((f.poly_degree - 3.0).abs() < 0.1);
        let expo: Vec<f64> = ns.iter().map(|n: &f64| 2f64.powf(-n)).collect();
        let f = fit_scaling(&ns, &expo).unwrap();
        assert_eq!(f.winner, ScalingModel::Exponential);
        assert!((f.exp_rate - std::f64::consts::LN_2).abs() < 0.05);
        assert!(fit_scaling(&ns[..3], &poly[..3]).is_err());
    }

    #[test]
    fn two_qubit_rotation_deviation() {
        let spec = AnsatzSpec::custom(
            Family::Heft,
            Entangler::PauliZzRotation,
            2,
            1,
            vec![GateOp::new(GateKind::PauliRotation2(Pauli::X, Pauli::Z), vec![0, 1], Some(0), 0).unwrap()],
        )
        .unwrap();
        let p = ParameterVector::new(vec![-0.7]).unwrap();
        assert_abs_diff_eq!(op_norm_deviation(&spec, &p).unwrap(), 2.0 * 0.35f64.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(triangle_bound(&spec, &p), 2.0 * 0.35f64.sin(), epsilon = 1e-15);
    }
}
