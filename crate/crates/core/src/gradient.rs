//! Cost gradients and gradient-variance experiments.
//!
//! Rotations are `exp(-i theta P)`, so the exact two-point rule is
//! `dC/dtheta = C(theta + pi/4) - C(theta - pi/4)`.

use std::f64::consts::FRAC_PI_4;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{draw_unchecked, AnsatzSpec, Entangler, Family, InitFamily, InitSpec, ParameterVector};
use crate::numeric::{linear_fit, mean, sample_variance};
use crate::pauli::{Hamiltonian, HamiltonianModel, PauliMasks};
use crate::statevector::{apply_pauli_string, GateKind, GateOp, Statevector};
use crate::{rng, Complex64, Error, Result};

pub const SHIFT: f64 = FRAC_PI_4;

/// Which parameters to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamIndex {
    One(usize),
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientEstimate {
    /// One entry per requested parameter (a single entry for `ParamIndex::One`).
    pub values: Vec<f64>,
    pub cost_at_point: f64,
}

impl GradientEstimate {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// `C(theta) = <0| U^dagger H U |0>`.
pub fn cost(h: &Hamiltonian, spec: &AnsatzSpec, params: &ParameterVector) -> Result<f64> {
    check_dims(h, spec)?;
    h.expectation(&crate::ansatz::execute_from_zero(spec, params)?)
}

fn check_dims(h: &Hamiltonian, spec: &AnsatzSpec) -> Result<()> {
    if h.num_qubits() != spec.num_qubits() {
        return Err(Error::DimensionMismatch { expected: spec.num_qubits(), found: h.num_qubits() });
    }
    Ok(())
}

fn generator_masks(gate: &GateOp, n: usize) -> Result<PauliMasks> {
    let gen = gate
        .kind
        .generator()
        .ok_or_else(|| Error::UnsupportedGate(format!("{:?} has no Pauli generator", gate.kind)))?;
    PauliMasks::new(gen.iter().map(|&(pos, p)| (gate.wires[pos], p)), n)
}

fn run_from(state: &mut Statevector, gates: &[GateOp], params: &[f64]) -> Result<()> {
    for g in gates {
        state.apply_gate(g, g.param_slot.map(|s| params[s]))?;
    }
    Ok(())
}

fn shift_convention_verified() -> Result<()> {
    static PROBE: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    PROBE
        .get_or_init(|| {
            // C(theta) = cos(2 theta) for RY on |0> measured in Z.
            let spec = AnsatzSpec::custom(
                Family::Heft,
                Entangler::CnotLadder,
                1,
                1,
                vec![GateOp { kind: GateKind::Ry, wires: vec![0], param_slot: Some(0), layer: 0 }],
            )
            .map_err(|e| e.to_string())?;
            let h = Hamiltonian::new(1, vec![crate::pauli::PauliTerm::new(1.0, [(0, crate::pauli::Pauli::Z)]).map_err(|e| e.to_string())?])
                .map_err(|e| e.to_string())?;
            let p = ParameterVector::new(vec![0.37]).map_err(|e| e.to_string())?;
            let ps = shift_all(&h, &spec, &p).map_err(|e| e.to_string())?.values[0];
            let fd = central_difference_grad(&h, &spec, &p, 1e-4).map_err(|e| e.to_string())?.values[0];
            if (ps - fd).abs() > 1e-6 {
                return Err(format!("parameter-shift probe {ps} disagrees with finite difference {fd}"));
            }
            Ok(())
        })
        .clone()
        .map_err(Error::Internal)
}

/// Parameter-shift gradient. Runs a one-off probe against the
/// finite-difference oracle before the first use.
pub fn parameter_shift_grad(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    params: &ParameterVector,
    which: ParamIndex,
) -> Result<GradientEstimate> {
    shift_convention_verified()?;
    match which {
        ParamIndex::All => shift_all(h, spec, params),
        ParamIndex::One(j) => {
            check_dims(h, spec)?;
            if j >= spec.num_params() {
                return Err(Error::Parameter(format!("parameter index {j} out of range {}", spec.num_params())));
            }
            if params.len() != spec.num_params() {
                return Err(Error::DimensionMismatch { expected: spec.num_params(), found: params.len() });
            }
            let gate = spec.gates().iter().find(|g| g.param_slot == Some(j)).expect("slot exists");
            generator_masks(gate, spec.num_qubits())?;
            let plus = cost(h, spec, &params.shifted(j, SHIFT))?;
            let minus = cost(h, spec, &params.shifted(j, -SHIFT))?;
            Ok(GradientEstimate { values: vec![plus - minus], cost_at_point: cost(h, spec, params)? })
        }
    }
}

/// All components, reusing the forward prefix state at each gate.
fn shift_all(h: &Hamiltonian, spec: &AnsatzSpec, params: &ParameterVector) -> Result<GradientEstimate> {
    check_dims(h, spec)?;
    if params.len() != spec.num_params() {
        return Err(Error::DimensionMismatch { expected: spec.num_params(), found: params.len() });
    }
    let theta = params.values();
    let gates = spec.gates();
    let mut prefix = Statevector::zero_state(spec.num_qubits())?;
    let mut values = vec![0.0; spec.num_params()];
    for (k, g) in gates.iter().enumerate() {
        if let Some(s) = g.param_slot {
            generator_masks(g, spec.num_qubits())?;
            let eval = |delta: f64| -> Result<f64> {
                let mut st = prefix.clone();
                st.apply_gate(g, Some(theta[s] + delta))?;
                run_from(&mut st, &gates[k + 1..], theta)?;
                h.expectation(&st)
            };
            values[s] = eval(SHIFT)? - eval(-SHIFT)?;
        }
        prefix.apply_gate(g, g.param_slot.map(|s| theta[s]))?;
    }
    Ok(GradientEstimate { values, cost_at_point: h.expectation(&prefix)? })
}

/// Central finite difference with step `step`; the test oracle for the
/// analytic rules.
pub fn central_difference_grad(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    params: &ParameterVector,
    step: f64,
) -> Result<GradientEstimate> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let values = (0..params.len())
        .map(|j| Ok((cost(h, spec, &params.shifted(j, step))? - cost(h, spec, &params.shifted(j, -step))?) / (2.0 * step)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientEstimate { values, cost_at_point: cost(h, spec, params)? })
}

/// Reverse-mode gradient: one forward and one backward sweep.
/// `dC/dtheta_k = 2 Im <lambda_k| P_k |phi_k>` with `phi_k` the state after
/// gate `k` and `lambda_k` the back-propagated `H |psi>`.
pub fn adjoint_grad(h: &Hamiltonian, spec: &AnsatzSpec, params: &ParameterVector) -> Result<GradientEstimate> {
    check_dims(h, spec)?;
    let n = spec.num_qubits();
    let theta = params.values();
    let mut phi = crate::ansatz::execute_from_zero(spec, params)?;
    let mut lambda = h.apply(&phi)?;
    let cost_at_point = phi.inner(&lambda)?.re;
    let mut values = vec![0.0; spec.num_params()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); phi.dim()];
    for g in spec.gates().iter().rev() {
        let t = g.param_slot.map(|s| theta[s]);
        if let Some(s) = g.param_slot {
            let masks = generator_masks(g, n)?;
            scratch.copy_from_slice(phi.amplitudes());
            apply_pauli_string(&mut scratch, masks);
            let ov = crate::numeric::pairwise_sum_complex_by(0, scratch.len(), &|i| lambda.amplitudes()[i].conj() * scratch[i]);
            values[s] = 2.0 * ov.im;
        }
        phi.apply_gate_inverse(g, t)?;
        lambda.apply_gate_inverse(g, t)?;
    }
    Ok(GradientEstimate { values, cost_at_point })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JPolicy {
    #[default]
    First,
    Middle,
    Last,
    AllMean,
}

impl JPolicy {
    pub fn name(self) -> &'static str {
        match self {
            JPolicy::First => "first",
            JPolicy::Middle => "middle",
            JPolicy::Last => "last",
            JPolicy::AllMean => "all_mean",
        }
    }

    fn index(self, num_params: usize) -> Option<usize> {
        match self {
            JPolicy::First => Some(0),
            JPolicy::Middle => Some(num_params / 2),
            JPolicy::Last => Some(num_params - 1),
            JPolicy::AllMean => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LPolicy {
    Fixed(usize),
    EqualN,
}

impl LPolicy {
    pub fn layers(self, n: usize) -> usize {
        match self {
            LPolicy::Fixed(l) => l,
            LPolicy::EqualN => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub family: Family,
    pub hamiltonian: String,
    pub n: usize,
    pub l: usize,
    /// Gaussian width; `None` for uniform initialization.
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    pub seeds: usize,
    pub j_policy: JPolicy,
    pub grad_mean: f64,
    pub grad_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceScan {
    pub rows: Vec<VarianceRow>,
}

impl VarianceScan {
    pub const CSV_HEADER: &'static str = "family,hamiltonian,n,l,sigma,kappa,seeds,j_policy,grad_mean,grad_var";

    pub fn to_csv_rows(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{:e},{:e}",
                    r.family.name(),
                    r.hamiltonian,
                    r.n,
                    r.l,
                    opt(r.sigma),
                    opt(r.kappa),
                    r.seeds,
                    r.j_policy.name(),
                    r.grad_mean,
                    r.grad_var
                )
            })
            .collect()
    }

    pub fn ns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.n as f64).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.grad_var).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceScanConfig {
    pub model: HamiltonianModel,
    pub family: Family,
    pub entangler: Entangler,
    pub n_list: Vec<usize>,
    pub l_policy: LPolicy,
    /// Template initializer; its seed is the base from which per-draw seeds derive.
    pub init: InitSpec,
    pub num_seeds: usize,
    pub j_policy: JPolicy,
}

/// Gradient samples for one `(n, l)` cell: one entry per seed, each the
/// gradient components selected by `j_policy`.
fn gradient_samples(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    init: &InitSpec,
    num_seeds: usize,
    j_policy: JPolicy,
) -> Result<Vec<Vec<f64>>> {
    (0..num_seeds)
        .into_par_iter()
        .map(|k| {
            let seed = rng::derive_seed(&[init.seed, spec.num_qubits() as u64, spec.num_layers() as u64, k as u64]);
            let params = draw_unchecked(spec, &init.with_seed(seed))?;
            let which = j_policy.index(spec.num_params()).map_or(ParamIndex::All, ParamIndex::One);
            Ok(parameter_shift_grad(h, spec, &params, which)?.values)
        })
        .collect()
}

fn summarize(samples: &[Vec<f64>]) -> (f64, f64) {
    let width = samples[0].len();
    let per_j: Vec<(f64, f64)> = (0..width)
        .map(|j| {
            let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            (mean(&col), sample_variance(&col))
        })
        .collect();
    let means: Vec<f64> = per_j.iter().map(|p| p.0).collect();
    let vars: Vec<f64> = per_j.iter().map(|p| p.1).collect();
    (mean(&means), mean(&vars))
}

pub fn variance_scan(cfg: &VarianceScanConfig) -> Result<VarianceScan> {
    if cfg.num_seeds < 2 {
        return Err(Error::InsufficientData(format!("num_seeds must be >= 2, got {}", cfg.num_seeds)));
    }
    if cfg.n_list.is_empty() {
        return Err(Error::InsufficientData("empty n_list".into()));
    }
    cfg.init.validate()?;
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let l = cfg.l_policy.layers(n);
        let spec = AnsatzSpec::build(cfg.family, n, l, cfg.entangler)?;
        let h = cfg.model.build(n)?;
        let samples = gradient_samples(&h, &spec, &cfg.init, cfg.num_seeds, cfg.j_policy)?;
        let (grad_mean, grad_var) = summarize(&samples);
        let gaussian = cfg.init.family == InitFamily::HeftGaussian;
        rows.push(VarianceRow {
            family: cfg.family,
            hamiltonian: cfg.model.name().to_string(),
            n,
            l,
            sigma: gaussian.then(|| cfg.init.sigma(l, n)),
            kappa: gaussian.then_some(cfg.init.kappa),
            seeds: cfg.num_seeds,
            j_policy: cfg.j_policy,
            grad_mean,
            grad_var,
        });
    }
    Ok(VarianceScan { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitScaleSweep {
    pub scan: VarianceScan,
    /// Width with the largest measured variance.
    pub sigma_star: f64,
    /// Fraction of consecutive steps beyond `sigma_star` where the variance drops.
    pub decreasing_fraction_after_peak: f64,
    /// Slope of `ln Var` against `ln sigma` below the peak.
    pub log_slope_before_peak: Option<f64>,
}

/// Gradient variance as a function of the Gaussian width at fixed `(n, l)`.
#[allow(clippy::too_many_arguments)]
pub fn init_scale_sweep(
    model: &HamiltonianModel,
    entangler: Entangler,
    n: usize,
    l: usize,
    sigma_list: &[f64],
    num_seeds: usize,
    j_policy: JPolicy,
    seed: u64,
) -> Result<InitScaleSweep> {
    if sigma_list.is_empty() || sigma_list.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument("sigma values must be positive".into()));
    }
    if num_seeds < 2 {
        return Err(Error::InsufficientData("num_seeds must be >= 2".into()));
    }
    let spec = AnsatzSpec::build(Family::Heft, n, l, entangler)?;
    let h = model.build(n)?;
    let mut rows = Vec::new();
    for &sigma in sigma_list {
        let kappa = sigma * (l * n) as f64;
        let init = InitSpec::heft(kappa, seed);
        let samples = gradient_samples(&h, &spec, &init, num_seeds, j_policy)?;
        let (grad_mean, grad_var) = summarize(&samples);
        rows.push(VarianceRow {
            family: Family::Heft,
            hamiltonian: model.name().to_string(),
            n,
            l,
            sigma: Some(sigma),
            kappa: Some(kappa),
            seeds: num_seeds,
            j_policy,
            grad_mean,
            grad_var,
        });
    }
    let peak = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.grad_var.total_cmp(&b.1.grad_var))
        .map(|(i, _)| i)
        .expect("non-empty");
    let tail = &rows[peak..];
    let decreasing_fraction_after_peak = if tail.len() < 2 {
        1.0
    } else {
        tail.windows(2).filter(|w| w[1].grad_var < w[0].grad_var).count() as f64 / (tail.len() - 1) as f64
    };
    let head: Vec<&VarianceRow> = rows[..=peak].iter().filter(|r| r.grad_var > 0.0).collect();
    let log_slope_before_peak = (head.len() >= 2).then(|| {
        let x: Vec<f64> = head.iter().map(|r| r.sigma.unwrap().ln()).collect();
        let y: Vec<f64> = head.iter().map(|r| r.grad_var.ln()).collect();
        linear_fit(&x, &y).1
    });
    Ok(InitScaleSweep {
        sigma_star: rows[peak].sigma.unwrap(),
        scan: VarianceScan { rows },
        decreasing_fraction_after_peak,
        log_slope_before_peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::draw_parameters;
    use crate::pauli::{Boundary, Pauli, PauliTerm};
    use approx::assert_abs_diff_eq;

    fn ry_probe() -> (Hamiltonian, AnsatzSpec) {
        let spec = AnsatzSpec::custom(
            Family::Heft,
            Entangler::CnotLadder,
            1,
            1,
            vec![GateOp::new(GateKind::Ry, vec![0], Some(0), 0).unwrap()],
        )
        .unwrap();
        (Hamiltonian::new(1, vec![PauliTerm::new(1.0, [(0, Pauli::Z)]).unwrap()]).unwrap(), spec)
    }

    #[test]
    fn ry_examples() {
        let (h, spec) = ry_probe();
        let g0 = parameter_shift_grad(&h, &spec, &ParameterVector::zeros(1), ParamIndex::One(0)).unwrap();
        assert_abs_diff_eq!(g0.values[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g0.cost_at_point, 1.0, epsilon = 1e-15);
        let p = ParameterVector::new(vec![std::f64::consts::PI / 8.0]).unwrap();
        let g = parameter_shift_grad(&h, &spec, &p, ParamIndex::One(0)).unwrap();
        assert_abs_diff_eq!(g.values[0], -std::f64::consts::SQRT_2, epsilon = 1e-14);
        let a = adjoint_grad(&h, &spec, &p).unwrap();
        assert_abs_diff_eq!(a.values[0], -std::f64::consts::SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn shift_matches_finite_difference() {
        let h = Hamiltonian::tfim(4, 1.0, 1.0, Boundary::Open).unwrap();
        for e in [Entangler::CnotLadder, Entangler::PauliZzRotation] {
            let spec = AnsatzSpec::build(Family::Hea, 4, 2, e).unwrap();
            for seed in 0..20 {
                let p = draw_parameters(&spec, &InitSpec::hea(seed)).unwrap();
                let ps = parameter_shift_grad(&h, &spec, &p, ParamIndex::All).unwrap();
                let fd = central_difference_grad(&h, &spec, &p, 1e-4).unwrap();
                let adj = adjoint_grad(&h, &spec, &p).unwrap();
                for j in 0..p.len() {
                    assert!((ps.values[j] - fd.values[j]).abs() < 1e-6);
                    assert!((ps.values[j] - adj.values[j]).abs() < 1e-10);
                }
                assert_abs_diff_eq!(ps.cost_at_point, adj.cost_at_point, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_index_matches_all() {
        let h = Hamiltonian::xxz(3, 1.0, 0.5, Boundary::Open).unwrap();
        let spec = AnsatzSpec::build(Family::Hea, 3, 2, Entangler::CzLadder).unwrap();
        let p = draw_parameters(&spec, &InitSpec::hea(1)).unwrap();
        let all = parameter_shift_grad(&h, &spec, &p, ParamIndex::All).unwrap();
        for j in [0, 5, spec.num_params() - 1] {
            let one = parameter_shift_grad(&h, &spec, &p, ParamIndex::One(j)).unwrap();
            assert_abs_diff_eq!(one.values[0], all.values[j], epsilon = 1e-12);
        }
        assert!(matches!(
            parameter_shift_grad(&h, &spec, &p, ParamIndex::One(99)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn rx_and_custom_gates() {
        let gates = vec![
            GateOp::new(GateKind::Rx, vec![0], Some(0), 0).unwrap(),
            GateOp::new(GateKind::H, vec![1], None, 0).unwrap(),
            GateOp::new(GateKind::PauliRotation2(Pauli::X, Pauli::Y), vec![1, 0], Some(1), 0).unwrap(),
            GateOp::new(GateKind::Rz, vec![1], Some(2), 0).unwrap(),
        ];
        let spec = AnsatzSpec::custom(Family::Hea, Entangler::CnotLadder, 2, 1, gates).unwrap();
        let h = Hamiltonian::xxz(2, 0.7, 1.3, Boundary::Open).unwrap();
        let p = ParameterVector::new(vec![0.4, -1.1, 2.0]).unwrap();
        let ps = parameter_shift_grad(&h, &spec, &p, ParamIndex::All).unwrap();
        let fd = central_difference_grad(&h, &spec, &p, 1e-4).unwrap();
        for j in 0..3 {
            assert!((ps.values[j] - fd.values[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn single_seed_scan_row() {
        let cfg = VarianceScanConfig {
            model: HamiltonianModel::Tfim { j: 1.0, h: 1.0, boundary: Boundary::Open },
            family: Family::Hea,
            entangler: Entangler::CnotLadder,
            n_list: vec![3],
            l_policy: LPolicy::EqualN,
            init: InitSpec::hea(0),
            num_seeds: 4,
            j_policy: JPolicy::First,
        };
        let scan = variance_scan(&cfg).unwrap();
        assert_eq!(scan.rows.len(), 1);
        assert!(scan.rows[0].grad_var >= 0.0);
        assert!(scan.rows[0].sigma.is_none());
        assert_eq!(scan.to_csv_rows()[0].split(',').count(), VarianceScan::CSV_HEADER.split(',').count());
        let short = VarianceScanConfig { num_seeds: 1, ..cfg };
        assert!(variance_scan(&short).is_err());
    }

    #[test]
    fn tiny_sigma_collapses_variance() {
        let model = HamiltonianModel::Tfim { j: 1.0, h: 1.0, boundary: Boundary::Open };
        let sweep = init_scale_sweep(&model, Entangler::CnotLadder, 3, 2, &[1e-6, 1e-1], 10, JPolicy::First, 5).unwrap();
        assert!(sweep.scan.rows[0].grad_var < 1e-9);
        assert!(sweep.scan.rows[1].grad_var > sweep.scan.rows[0].grad_var);
    }

    #[test]
    fn scan_is_deterministic() {
        let cfg = VarianceScanConfig {
            model: HamiltonianModel::Xxz { j: 1.0, delta: 1.0, boundary: Boundary::Open },
            family: Family::Heft,
            entangler: Entangler::CnotLadder,
            n_list: vec![2, 3],
            l_policy: LPolicy::Fixed(2),
            init: InitSpec::heft(1.0, 11),
            num_seeds: 8,
            j_policy: JPolicy::AllMean,
        };
        assert_eq!(variance_scan(&cfg).unwrap(), variance_scan(&cfg).unwrap());
    }
}
