//! Variational energy minimization.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{draw_parameters, execute_from_zero, AnsatzSpec, Entangler, Family, InitSpec, ParameterVector};
use crate::gradient::{adjoint_grad, cost, parameter_shift_grad, ParamIndex, SHIFT};
use crate::noise::{execute_density, noisy_expectation, shot_expectation, shot_expectation_density, Backend, NoiseModel, ShotConfig};
use crate::pauli::{ground_space, ground_state, GroundSpace, Hamiltonian};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
    Rmsprop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_stability: f64,
    /// RMSProp squared-gradient decay.
    pub decay: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Stop once the energy moves less than this over `energy_window` steps.
    pub energy_tol: f64,
    pub energy_window: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps_stability: 1e-8,
            decay: 0.9,
            max_steps: 500,
            grad_tol: 1e-6,
            energy_tol: 1e-9,
            energy_window: 25,
        }
    }
}

impl OptimizerConfig {
    pub fn with_kind(kind: OptimizerKind) -> Self {
        OptimizerConfig { kind, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be in [0, 1), got {v}")))
            }
        };
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        unit("decay", self.decay)?;
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
        }
        if !(self.eps_stability > 0.0) || self.grad_tol < 0.0 || self.energy_tol < 0.0 {
            return Err(Error::InvalidArgument("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

struct Optimizer {
    cfg: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    fn new(cfg: OptimizerConfig, len: usize) -> Self {
        Optimizer { cfg, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        let c = self.cfg;
        self.t += 1;
        match c.kind {
            OptimizerKind::Sgd => theta.iter_mut().zip(grad).for_each(|(x, g)| *x -= c.learning_rate * g),
            OptimizerKind::Rmsprop => {
                for ((x, g), v) in theta.iter_mut().zip(grad).zip(&mut self.v) {
                    *v = c.decay * *v + (1.0 - c.decay) * g * g;
                    *x -= c.learning_rate * g / (v.sqrt() + c.eps_stability);
                }
            }
            OptimizerKind::Adam => {
                let b1t = 1.0 - c.beta1.powi(self.t);
                let b2t = 1.0 - c.beta2.powi(self.t);
                for (((x, g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    *x -= c.learning_rate * (*m / b1t) / ((*v / b2t).sqrt() + c.eps_stability);
                }
            }
        }
    }
}

/// Where gradients (and the recorded energies) come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GradSource {
    /// Exact gradients from a reverse sweep over the statevector.
    #[default]
    Exact,
    /// Exact gradients from the two-point shift rule.
    ParameterShift,
    /// Shift rule with shot-estimated energies; the trace records exact energies.
    Shots { shots: u64, seed: u64 },
    /// Shift rule on the noisy expectation; the trace records noisy energies.
    Noisy { noise: NoiseModel, backend: Backend },
    /// Shift rule on shot estimates of the noisy state (density backend).
    NoisyShots { noise: NoiseModel, shots: u64, seed: u64 },
}

impl GradSource {
    pub fn is_exact(&self) -> bool {
        matches!(self, GradSource::Exact | GradSource::ParameterShift)
    }

    fn energy(&self, h: &Hamiltonian, spec: &AnsatzSpec, p: &ParameterVector) -> Result<f64> {
        match *self {
            GradSource::Exact | GradSource::ParameterShift | GradSource::Shots { .. } => cost(h, spec, p),
            GradSource::Noisy { noise, backend } => Ok(noisy_expectation(h, spec, p, &noise, backend)?.value),
            GradSource::NoisyShots { noise, .. } => execute_density(spec, p, &noise)?.expectation(h),
        }
    }

    /// Returns `(energy, gradient)` at `p`.
    fn evaluate(&self, h: &Hamiltonian, spec: &AnsatzSpec, p: &ParameterVector, step: usize) -> Result<(f64, Vec<f64>)> {
        match *self {
            GradSource::Exact => {
                let g = adjoint_grad(h, spec, p)?;
                Ok((g.cost_at_point, g.values))
            }
            GradSource::ParameterShift => {
                let g = parameter_shift_grad(h, spec, p, ParamIndex::All)?;
                Ok((g.cost_at_point, g.values))
            }
            GradSource::Shots { shots, seed } => {
                let est = |q: &ParameterVector, tag: u64| -> Result<f64> {
                    let cfg = ShotConfig::new(shots, rng::derive_seed(&[seed, step as u64, tag]))?;
                    Ok(shot_expectation(h, &execute_from_zero(spec, q)?, &cfg)?.value)
                };
                let grad = shift_rule(p, |q, tag| est(q, tag))?;
                Ok((cost(h, spec, p)?, grad))
            }
            GradSource::Noisy { noise, backend } => {
                let grad = shift_rule(p, |q, _| Ok(noisy_expectation(h, spec, q, &noise, backend)?.value))?;
                Ok((self.energy(h, spec, p)?, grad))
            }
            GradSource::NoisyShots { noise, shots, seed } => {
                let grad = shift_rule(p, |q, tag| {
                    let cfg = ShotConfig::new(shots, rng::derive_seed(&[seed, step as u64, tag]))?;
                    Ok(shot_expectation_density(h, &execute_density(spec, q, &noise)?, &cfg)?.value)
                })?;
                Ok((self.energy(h, spec, p)?, grad))
            }
        }
    }
}

/// `g_j = f(theta + s e_j) - f(theta - s e_j)`; `f` also receives a tag
/// unique to each evaluation so stochastic estimators can seed per call.
fn shift_rule(p: &ParameterVector, f: impl Fn(&ParameterVector, u64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    (0..p.len())
        .into_par_iter()
        .map(|j| Ok(f(&p.shifted(j, SHIFT), 2 * j as u64)? - f(&p.shifted(j, -SHIFT), 2 * j as u64 + 1)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradTol,
    EnergyTol,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingTrace {
    pub steps: Vec<StepRecord>,
    pub initial_params: ParameterVector,
    pub final_params: ParameterVector,
    pub final_energy: f64,
    pub final_fidelity: Option<f64>,
    pub stop_reason: StopReason,
}

impl TrainingTrace {
    pub fn min_energy(&self) -> f64 {
        self.steps.iter().map(|s| s.energy).fold(self.final_energy, f64::min)
    }

    /// `|E_final - E_0| / |E_0|`.
    pub fn relative_error(&self, e0: f64) -> f64 {
        (self.final_energy - e0).abs() / e0.abs()
    }
}

/// Draws starting parameters from `init` and minimizes.
pub fn minimize(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    init: &InitSpec,
    opt: &OptimizerConfig,
    source: &GradSource,
) -> Result<TrainingTrace> {
    minimize_from(h, spec, draw_parameters(spec, init)?, opt, source)
}

pub fn minimize_from(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    start: ParameterVector,
    opt: &OptimizerConfig,
    source: &GradSource,
) -> Result<TrainingTrace> {
    opt.validate()?;
    if h.num_qubits() != spec.num_qubits() {
        return Err(Error::DimensionMismatch { expected: spec.num_qubits(), found: h.num_qubits() });
    }
    if start.len() != spec.num_params() {
        return Err(Error::DimensionMismatch { expected: spec.num_params(), found: start.len() });
    }
    let clock = Instant::now();
    let mut theta = start.clone();
    let mut optimizer = Optimizer::new(*opt, theta.len());
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut stop_reason = StopReason::MaxSteps;
    let last_good = |steps: &[StepRecord]| steps.last().map_or(f64::NAN, |s| s.energy);
    for step in 0..opt.max_steps {
        let (energy, grad) = source.evaluate(h, spec, &theta, step)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !energy.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Divergence { step, last_energy: last_good(&steps) });
        }
        steps.push(StepRecord { step, energy, grad_norm, wall_time_s: clock.elapsed().as_secs_f64() });
        if grad_norm < opt.grad_tol {
            stop_reason = StopReason::GradTol;
            break;
        }
        let w = opt.energy_window;
        if w > 0 && steps.len() > w && (steps[steps.len() - 1 - w].energy - energy).abs() < opt.energy_tol {
            stop_reason = StopReason::EnergyTol;
            break;
        }
        optimizer.step(theta.values_mut(), &grad);
        if theta.values().iter().any(|t| !t.is_finite()) {
            return Err(Error::Divergence { step, last_energy: energy });
        }
    }
    let final_energy = if stop_reason == StopReason::MaxSteps {
        source.energy(h, spec, &theta)?
    } else {
        steps.last().expect("at least one step").energy
    };
    if !final_energy.is_finite() {
        return Err(Error::Divergence { step: steps.len(), last_energy: last_good(&steps) });
    }
    Ok(TrainingTrace { steps, initial_params: start, final_params: theta, final_energy, final_fidelity: None, stop_reason })
}

/// Runs one minimization per seed, in parallel; output order follows `seeds`.
pub fn minimize_seeds(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    init: &InitSpec,
    opt: &OptimizerConfig,
    source: &GradSource,
    seeds: &[u64],
) -> Result<Vec<TrainingTrace>> {
    seeds.par_iter().map(|&s| minimize(h, spec, &init.with_seed(s), opt, source)).collect()
}

/// Ground-space overlap of the trained state.
pub fn fidelity_vs_exact(spec: &AnsatzSpec, trace: &TrainingTrace, h: &Hamiltonian) -> Result<f64> {
    if h.num_qubits() > 14 {
        return Err(Error::InvalidSize(format!("fidelity oracle supports N <= 14, got {}", h.num_qubits())));
    }
    fidelity_against(spec, trace, &ground_space(h, 1e-10, 1e-8)?)
}

/// As [`fidelity_vs_exact`] with a precomputed ground space.
pub fn fidelity_against(spec: &AnsatzSpec, trace: &TrainingTrace, gs: &GroundSpace) -> Result<f64> {
    gs.fidelity(&execute_from_zero(spec, &trace.final_params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// Axis values are offsets added to the current parameters.
    #[default]
    Relative,
    /// Axis values replace the current parameters.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
    #[serde(default)]
    pub mode: GridMode,
}

impl Grid {
    /// Axis values; a resolution of 1 means "the current value only".
    fn axis(&self, current: f64) -> Vec<f64> {
        if self.resolution == 1 {
            return vec![current];
        }
        let r = self.resolution - 1;
        (0..=r)
            .map(|k| {
                let x = self.lo + (self.hi - self.lo) * k as f64 / r as f64;
                match self.mode {
                    GridMode::Relative => current + x,
                    GridMode::Absolute => x,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    pub axis_i: Vec<f64>,
    pub axis_j: Vec<f64>,
    /// `values[a][b]` is the cost at `(axis_i[a], axis_j[b])`.
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    pub fn std_dev(&self) -> f64 {
        let flat: Vec<f64> = self.values.iter().flatten().copied().collect();
        if flat.len() < 2 {
            return 0.0;
        }
        crate::numeric::sample_variance(&flat).sqrt()
    }
}

/// Cost over a 2D slice through parameters `i` and `j`.
pub fn landscape_scan(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    params: &ParameterVector,
    i: usize,
    j: usize,
    grid: &Grid,
) -> Result<Landscape> {
    let p = spec.num_params();
    if i >= p || j >= p {
        return Err(Error::Parameter(format!("axis index out of range {p}")));
    }
    if i == j {
        return Err(Error::Parameter("landscape axes must differ".into()));
    }
    if grid.resolution == 0 || !(grid.lo.is_finite() && grid.hi.is_finite()) {
        return Err(Error::InvalidArgument("grid needs resolution >= 1 and finite bounds".into()));
    }
    let axis_i = grid.axis(params.values()[i]);
    let axis_j = grid.axis(params.values()[j]);
    let values = axis_i
        .par_iter()
        .map(|&a| {
            axis_j
                .iter()
                .map(|&b| {
                    let mut q = params.clone();
                    q.values_mut()[i] = a;
                    q.values_mut()[j] = b;
                    cost(h, spec, &q)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Landscape { axis_i, axis_j, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub l: usize,
    pub num_params: usize,
    pub best_relative_error: f64,
    pub mean_relative_error: f64,
}

/// Best and mean relative energy error against depth.
#[allow(clippy::too_many_arguments)]
pub fn parameter_efficiency_curve(
    h: &Hamiltonian,
    family: Family,
    entangler: Entangler,
    l_list: &[usize],
    init: &InitSpec,
    opt: &OptimizerConfig,
    seeds: &[u64],
) -> Result<Vec<EfficiencyRow>> {
    if l_list.contains(&0) {
        return Err(Error::InvalidSize("depth list contains L = 0".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InsufficientData("no seeds".into()));
    }
    let (e0, _) = ground_state(h, 1e-10)?;
    l_list
        .iter()
        .map(|&l| {
            let spec = AnsatzSpec::build(family, h.num_qubits(), l, entangler)?;
            let errs: Vec<f64> = minimize_seeds(h, &spec, init, opt, &GradSource::Exact, seeds)?
                .iter()
                .map(|t| t.relative_error(e0))
                .collect();
            Ok(EfficiencyRow {
                l,
                num_params: spec.num_params(),
                best_relative_error: errs.iter().copied().fold(f64::INFINITY, f64::min),
                mean_relative_error: crate::numeric::mean(&errs),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Placement;
    use crate::pauli::{Boundary, Pauli, PauliTerm};
    use crate::statevector::{GateKind, GateOp};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

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
    fn tfim2_reaches_ground_energy() {
        let h = Hamiltonian::tfim(2, 1.0, 1.0, Boundary::Open).unwrap();
        let spec = AnsatzSpec::build(Family::Heft, 2, 2, Entangler::CnotLadder).unwrap();
        let opt = OptimizerConfig::default();
        let trace = minimize(&h, &spec, &InitSpec::heft(1.0, 0), &opt, &GradSource::Exact).unwrap();
        let e0 = -(5.0f64).sqrt();
        assert!((trace.final_energy - e0).abs() < 1e-3, "{}", trace.final_energy);
        assert!(trace.min_energy() >= e0 - 1e-9);
        assert!(trace.steps.len() <= 500);
        assert!(fidelity_vs_exact(&spec, &trace, &h).unwrap() >= 0.999);
    }

    #[test]
    fn exact_sources_agree() {
        let h = Hamiltonian::tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        let spec = AnsatzSpec::build(Family::Heft, 3, 1, Entangler::CnotLadder).unwrap();
        let opt = OptimizerConfig { max_steps: 30, ..Default::default() };
        let init = InitSpec::heft(1.0, 4);
        let a = minimize(&h, &spec, &init, &opt, &GradSource::Exact).unwrap();
        let b = minimize(&h, &spec, &init, &opt, &GradSource::ParameterShift).unwrap();
        for (x, y) in a.final_params.values().iter().zip(b.final_params.values()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn one_dimensional_landscape() {
        let (h, spec) = ry_probe();
        let opt = OptimizerConfig { max_steps: 2000, ..Default::default() };
        let t = minimize_from(&h, &spec, ParameterVector::new(vec![0.3]).unwrap(), &opt, &GradSource::Exact).unwrap();
        assert!((t.final_energy + 1.0).abs() < 1e-6);
        // theta = 0 is the maximum of cos(2 theta): zero gradient, no motion.
        let stall = minimize_from(&h, &spec, ParameterVector::zeros(1), &opt, &GradSource::Exact).unwrap();
        assert_eq!(stall.stop_reason, StopReason::GradTol);
        assert_abs_diff_eq!(stall.final_energy, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn every_optimizer_converges_on_tfim4() {
        let h = Hamiltonian::tfim(4, 1.0, 1.0, Boundary::Open).unwrap();
        let (e0, _) = ground_state(&h, 1e-10).unwrap();
        let spec = AnsatzSpec::build(Family::Heft, 4, 4, Entangler::CnotLadder).unwrap();
        for (kind, lr) in [(OptimizerKind::Adam, 0.05), (OptimizerKind::Sgd, 0.05), (OptimizerKind::Rmsprop, 0.01)] {
            let opt = OptimizerConfig { kind, learning_rate: lr, max_steps: 2000, ..Default::default() };
            let t = minimize(&h, &spec, &InitSpec::heft(1.0, 1), &opt, &GradSource::Exact).unwrap();
            assert!(t.final_energy - e0 < 1e-2, "{kind:?}: {} vs {e0}", t.final_energy);
        }
    }

    #[test]
    fn deterministic_traces() {
        let h = Hamiltonian::xxz(3, 1.0, 1.0, Boundary::Open).unwrap();
        let spec = AnsatzSpec::build(Family::Hea, 3, 2, Entangler::CnotLadder).unwrap();
        let opt = OptimizerConfig { max_steps: 20, ..Default::default() };
        let src = GradSource::Shots { shots: 50, seed: 3 };
        let a = minimize(&h, &spec, &InitSpec::hea(2), &opt, &src).unwrap();
        let b = minimize(&h, &spec, &InitSpec::hea(2), &opt, &src).unwrap();
        assert_eq!(a.final_params, b.final_params);
        assert_eq!(a.steps.iter().map(|s| s.energy).collect::<Vec<_>>(), b.steps.iter().map(|s| s.energy).collect::<Vec<_>>());
    }

    #[test]
    fn zero_angle_layer_preserves_energy() {
        let h = Hamiltonian::tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        let spec = AnsatzSpec::build(Family::Heft, 3, 2, Entangler::PauliZzRotation).unwrap();
        let t = minimize(&h, &spec, &InitSpec::heft(1.0, 0), &OptimizerConfig::default(), &GradSource::Exact).unwrap();
        let deeper = AnsatzSpec::build(Family::Heft, 3, 3, Entangler::PauliZzRotation).unwrap();
        let mut p = t.final_params.clone().into_inner();
        p.resize(deeper.num_params(), 0.0);
        let e = cost(&h, &deeper, &ParameterVector::new(p).unwrap()).unwrap();
        assert_abs_diff_eq!(e, t.final_energy, epsilon = 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let (h, spec) = ry_probe();
        let opt = OptimizerConfig { kind: OptimizerKind::Sgd, learning_rate: 1e308, max_steps: 10, ..Default::default() };
        let r = minimize_from(&h, &spec, ParameterVector::new(vec![0.3]).unwrap(), &opt, &GradSource::Exact);
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn invalid_optimizer_config() {
        assert!(OptimizerConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { beta1: 1.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { max_steps: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn landscape_matches_cosine() {
        let (h, spec) = ry_probe();
        // A second, inert axis: append an RZ gate after the RY.
        let gates = vec![spec.gates()[0].clone(), GateOp::new(GateKind::Rz, vec![0], Some(1), 0).unwrap()];
        let spec = AnsatzSpec::custom(Family::Heft, Entangler::CnotLadder, 1, 1, gates).unwrap();
        let grid = Grid { lo: -PI, hi: PI, resolution: 21, mode: GridMode::Absolute };
        let land = landscape_scan(&h, &spec, &ParameterVector::zeros(2), 0, 1, &grid).unwrap();
        for (a, row) in land.axis_i.iter().zip(&land.values) {
            for v in row {
                assert_abs_diff_eq!(*v, (2.0 * a).cos(), epsilon = 1e-10);
            }
        }
        let one = Grid { resolution: 1, ..grid };
        let p = ParameterVector::new(vec![0.4, 0.1]).unwrap();
        let single = landscape_scan(&h, &spec, &p, 0, 1, &one).unwrap();
        assert_abs_diff_eq!(single.values[0][0], cost(&h, &spec, &p).unwrap(), epsilon = 1e-15);
        assert!(landscape_scan(&h, &spec, &p, 0, 0, &one).is_err());
    }

    #[test]
    fn efficiency_rejects_zero_depth() {
        let h = Hamiltonian::tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        let r = parameter_efficiency_curve(
            &h,
            Family::Heft,
            Entangler::CnotLadder,
            &[0, 1],
            &InitSpec::heft(1.0, 0),
            &OptimizerConfig::default(),
            &[0],
        );
        assert!(matches!(r, Err(Error::InvalidSize(_))));
    }

    #[test]
    fn noisy_training_runs() {
        let h = Hamiltonian::tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        let spec = AnsatzSpec::build(Family::Heft, 3, 1, Entangler::CnotLadder).unwrap();
        let noise = NoiseModel::new(0.01, Placement::AfterEachGate).unwrap();
        let opt = OptimizerConfig { max_steps: 40, ..Default::default() };
        let t = minimize(&h, &spec, &InitSpec::heft(1.0, 0), &opt, &GradSource::Noisy { noise, backend: Backend::DensityMatrix }).unwrap();
        assert!(t.final_energy < t.steps[0].energy);
        let ts = minimize(&h, &spec, &InitSpec::heft(1.0, 0), &opt, &GradSource::NoisyShots { noise, shots: 200, seed: 1 }).unwrap();
        assert!(ts.final_energy.is_finite());
    }
}
