//! Depolarizing noise and finite-shot estimation.
//!
//! Two noisy backends share one insertion schedule: exact density-matrix
//! evolution (up to [`MAX_DENSITY_QUBITS`]) and Monte Carlo Pauli
//! trajectories on pure states.

use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{draw_unchecked, execute_from_zero, AnsatzSpec, InitSpec, ParameterVector};
use crate::density::{DensityMatrix, MAX_DENSITY_QUBITS};
use crate::gradient::SHIFT;
use crate::numeric::{mean, pairwise_sum, sample_variance};
use crate::pauli::{Hamiltonian, Pauli, PauliMasks};
use crate::statevector::{apply_pauli_string, apply_single_qubit_matrix, GateOp, Statevector};
use crate::{rng, Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// One single-qubit channel on every wire a gate touches.
    #[default]
    AfterEachGate,
    /// One channel on every wire at the end of each layer.
    AfterEachLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub p: f64,
    #[serde(default)]
    pub placement: Placement,
}

impl NoiseModel {
    pub fn new(p: f64, placement: Placement) -> Result<Self> {
        let m = NoiseModel { p, placement };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!("depolarizing probability must be in [0, 1), got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum Backend {
    DensityMatrix,
    Trajectories { count: usize, seed: u64 },
}

/// Walks the circuit, calling `on_gate` per gate and `on_noise(wire)` at
/// every insertion point of `noise`.
fn walk(
    spec: &AnsatzSpec,
    params: &ParameterVector,
    noise: &NoiseModel,
    mut on_gate: impl FnMut(&GateOp, Option<f64>) -> Result<()>,
    mut on_noise: impl FnMut(usize) -> Result<()>,
) -> Result<()> {
    if params.len() != spec.num_params() {
        return Err(Error::DimensionMismatch { expected: spec.num_params(), found: params.len() });
    }
    let gates = spec.gates();
    for (k, g) in gates.iter().enumerate() {
        on_gate(g, g.param_slot.map(|s| params.values()[s]))?;
        match noise.placement {
            Placement::AfterEachGate => {
                for &w in &g.wires {
                    on_noise(w)?;
                }
            }
            Placement::AfterEachLayer => {
                if gates.get(k + 1).is_none_or(|next| next.layer != g.layer) {
                    for w in 0..spec.num_qubits() {
                        on_noise(w)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Number of channel insertions the schedule makes.
pub fn insertion_count(spec: &AnsatzSpec, noise: &NoiseModel) -> usize {
    let mut count = 0;
    walk(spec, &ParameterVector::zeros(spec.num_params()), noise, |_, _| Ok(()), |_| {
        count += 1;
        Ok(())
    })
    .expect("schedule walk cannot fail");
    count
}

/// Exact noisy evolution of `|0...0>`.
pub fn execute_density(spec: &AnsatzSpec, params: &ParameterVector, noise: &NoiseModel) -> Result<DensityMatrix> {
    noise.validate()?;
    if spec.num_qubits() > MAX_DENSITY_QUBITS {
        return Err(Error::InvalidSize(format!(
            "density backend supports at most {MAX_DENSITY_QUBITS} qubits, got {}",
            spec.num_qubits()
        )));
    }
    let mut rho = DensityMatrix::from_pure(&Statevector::zero_state(spec.num_qubits())?)?;
    let p = noise.p;
    let cell = std::cell::RefCell::new(&mut rho);
    walk(spec, params, noise, |g, t| cell.borrow_mut().apply_gate(g, t), |w| cell.borrow_mut().apply_depolarizing(w, p))?;
    Ok(rho)
}

/// One Pauli trajectory: after each insertion apply X, Y or Z with
/// probability `p / 3` each.
pub fn execute_trajectory(
    spec: &AnsatzSpec,
    params: &ParameterVector,
    noise: &NoiseModel,
    rng: &mut rng::Rng,
) -> Result<Statevector> {
    noise.validate()?;
    let n = spec.num_qubits();
    let state = std::cell::RefCell::new(Statevector::zero_state(n)?);
    let p = noise.p;
    walk(
        spec,
        params,
        noise,
        |g, t| state.borrow_mut().apply_gate(g, t),
        |w| {
            let u: f64 = rng.random();
            if u < p {
                let pauli = [Pauli::X, Pauli::Y, Pauli::Z][((u / p) * 3.0).min(2.0) as usize];
                let masks = PauliMasks::new([(w, pauli)], n)?;
                apply_pauli_string(state.borrow_mut().amplitudes_mut(), masks);
            }
            Ok(())
        },
    )?;
    Ok(state.into_inner())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// `Tr(rho H)` under noise. Exact for the density backend; trajectory
/// mean with its standard error otherwise.
pub fn noisy_expectation(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    params: &ParameterVector,
    noise: &NoiseModel,
    backend: Backend,
) -> Result<Estimate> {
    match backend {
        Backend::DensityMatrix => Ok(Estimate { value: execute_density(spec, params, noise)?.expectation(h)?, stderr: 0.0 }),
        Backend::Trajectories { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidArgument("trajectory count must be >= 1".into()));
            }
            let values = (0..count)
                .into_par_iter()
                .map(|t| {
                    let mut r = rng::stream(seed, t as u64);
                    h.expectation(&execute_trajectory(spec, params, noise, &mut r)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            let stderr = if count > 1 { (sample_variance(&values) / count as f64).sqrt() } else { f64::INFINITY };
            Ok(Estimate { value: mean(&values), stderr })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    PerTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotConfig {
    pub shots: u64,
    pub seed: u64,
    #[serde(default)]
    pub grouping: Grouping,
}

impl ShotConfig {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be >= 1".into()));
        }
        Ok(ShotConfig { shots, seed, grouping: Grouping::PerTerm })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ShotConfig { seed, ..self }
    }
}

/// Probability that measuring the Pauli string of `masks` yields `+1`,
/// obtained by rotating each factor to the computational basis
/// (`X`: H, `Y`: H S^dagger) and summing even-parity outcomes.
fn plus_probability(state: &Statevector, masks: PauliMasks) -> f64 {
    let n = state.num_qubits();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re, im| Complex64::new(re, im);
    let had = [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]];
    let had_sdg = [[c(r, 0.0), c(0.0, -r)], [c(r, 0.0), c(0.0, r)]];
    let mut amps = state.amplitudes().to_vec();
    for q in 0..n {
        let b = 1usize << (n - 1 - q);
        match (masks.x & b != 0, masks.z & b != 0) {
            (true, false) => apply_single_qubit_matrix(&mut amps, n, q, had),
            (true, true) => apply_single_qubit_matrix(&mut amps, n, q, had_sdg),
            _ => {}
        }
    }
    let support = masks.x | masks.z;
    pairwise_sum(
        &amps
            .iter()
            .enumerate()
            .filter(|(b, _)| (b & support).count_ones().is_multiple_of(2))
            .map(|(_, a)| a.norm_sqr())
            .collect::<Vec<_>>(),
    )
    .clamp(0.0, 1.0)
}

/// Samples `shots` outcomes of a `+-1` observable with `P(+1) = p_plus`;
/// returns the sample mean and unbiased sample variance of the outcomes.
fn sample_term(p_plus: f64, shots: u64, rng: &mut rng::Rng) -> Result<(f64, f64)> {
    let k = Binomial::new(shots, p_plus)
        .map_err(|e| Error::Internal(format!("binomial({shots}, {p_plus}): {e}")))?
        .sample(rng);
    let m = (2.0 * k as f64 - shots as f64) / shots as f64;
    let pop = (1.0 - m * m).max(0.0);
    let var = if shots > 1 { pop * shots as f64 / (shots - 1) as f64 } else { pop };
    Ok((m, var))
}

fn combine(h: &Hamiltonian, p_plus: &[f64], cfg: &ShotConfig) -> Result<Estimate> {
    if cfg.shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let mut est = Vec::with_capacity(p_plus.len());
    let mut var = Vec::with_capacity(p_plus.len());
    for (i, (t, &pp)) in h.terms().iter().zip(p_plus).enumerate() {
        let mut r = rng::stream(cfg.seed, i as u64);
        let (m, v) = sample_term(pp, cfg.shots, &mut r)?;
        est.push(t.coeff * m);
        var.push(t.coeff * t.coeff * v);
    }
    Ok(Estimate { value: pairwise_sum(&est), stderr: (pairwise_sum(&var) / cfg.shots as f64).sqrt() })
}

/// Finite-shot energy estimate with per-term measurement.
pub fn shot_expectation(h: &Hamiltonian, state: &Statevector, cfg: &ShotConfig) -> Result<Estimate> {
    if h.num_qubits() != state.num_qubits() {
        return Err(Error::DimensionMismatch { expected: h.num_qubits(), found: state.num_qubits() });
    }
    if (state.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: state.norm() });
    }
    let p_plus = h
        .terms()
        .iter()
        .map(|t| Ok(plus_probability(state, t.masks(h.num_qubits())?)))
        .collect::<Result<Vec<f64>>>()?;
    combine(h, &p_plus, cfg)
}

/// Finite-shot estimate on a mixed state; `P(+1) = (1 + Tr(rho P)) / 2`.
pub fn shot_expectation_density(h: &Hamiltonian, rho: &DensityMatrix, cfg: &ShotConfig) -> Result<Estimate> {
    let p_plus: Vec<f64> = rho.term_expectations(h)?.iter().map(|e| ((1.0 + e) / 2.0).clamp(0.0, 1.0)).collect();
    combine(h, &p_plus, cfg)
}

/// Exact single-shot variance `sum_t c_t^2 (1 - <P_t>^2)`; the shot
/// estimator's MSE is this divided by the shot count.
pub fn single_shot_variance(h: &Hamiltonian, state: &Statevector) -> Result<f64> {
    let e = h.term_expectations(state)?;
    Ok(pairwise_sum(&h.terms().iter().zip(&e).map(|(t, v)| t.coeff * t.coeff * (1.0 - v * v)).collect::<Vec<_>>()))
}

/// Parameter-shift derivative with both cost evaluations estimated from shots.
pub fn shot_parameter_shift(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    params: &ParameterVector,
    j: usize,
    cfg: &ShotConfig,
) -> Result<Estimate> {
    if j >= spec.num_params() {
        return Err(Error::Parameter(format!("parameter index {j} out of range {}", spec.num_params())));
    }
    let plus = shot_expectation(h, &execute_from_zero(spec, &params.shifted(j, SHIFT))?, &cfg.with_seed(rng::derive_seed(&[cfg.seed, j as u64, 1])))?;
    let minus = shot_expectation(h, &execute_from_zero(spec, &params.shifted(j, -SHIFT))?, &cfg.with_seed(rng::derive_seed(&[cfg.seed, j as u64, 2])))?;
    Ok(Estimate { value: plus.value - minus.value, stderr: plus.stderr.hypot(minus.stderr) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseRow {
    pub shots: u64,
    pub repetitions: usize,
    pub mse: f64,
    pub mean_estimate: f64,
    pub exact: f64,
    /// `single_shot_variance / shots`.
    pub predicted_mse: f64,
}

/// Empirical MSE of shot energy estimates on the state prepared from `init`.
pub fn mse_vs_shots(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    init: &InitSpec,
    shots_list: &[u64],
    repetitions: usize,
) -> Result<Vec<MseRow>> {
    if repetitions < 2 {
        return Err(Error::InsufficientData("repetitions must be >= 2".into()));
    }
    let state = execute_from_zero(spec, &draw_unchecked(spec, init)?)?;
    let exact = h.expectation(&state)?;
    let var1 = single_shot_variance(h, &state)?;
    shots_list
        .iter()
        .map(|&shots| {
            let estimates = (0..repetitions)
                .into_par_iter()
                .map(|r| {
                    let cfg = ShotConfig::new(shots, rng::derive_seed(&[init.seed, shots, r as u64]))?;
                    Ok(shot_expectation(h, &state, &cfg)?.value)
                })
                .collect::<Result<Vec<f64>>>()?;
            let sq: Vec<f64> = estimates.iter().map(|e| (e - exact) * (e - exact)).collect();
            Ok(MseRow {
                shots,
                repetitions,
                mse: mean(&sq),
                mean_estimate: mean(&estimates),
                exact,
                predicted_mse: var1 / shots as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{draw_parameters, Entangler, Family};
    use crate::pauli::{Boundary, PauliTerm};
    use approx::assert_abs_diff_eq;

    fn single(p: Pauli) -> Hamiltonian {
        Hamiltonian::new(1, vec![PauliTerm::new(1.0, [(0, p)]).unwrap()]).unwrap()
    }

    fn small_circuit(seed: u64) -> (AnsatzSpec, ParameterVector) {
        let spec = AnsatzSpec::build(Family::Hea, 4, 2, Entangler::CnotLadder).unwrap();
        let p = draw_parameters(&spec, &InitSpec::hea(seed)).unwrap();
        (spec, p)
    }

    #[test]
    fn noise_probability_range() {
        assert!(NoiseModel::new(1.0, Placement::AfterEachGate).is_err());
        assert!(NoiseModel::new(-0.1, Placement::AfterEachGate).is_err());
        assert!(NoiseModel::new(0.0, Placement::AfterEachLayer).is_ok());
    }

    #[test]
    fn insertion_counts() {
        let spec = AnsatzSpec::build(Family::Heft, 3, 2, Entangler::CnotLadder).unwrap();
        // Per layer: 6 rotations (1 wire each) + 2 CNOTs (2 wires each).
        assert_eq!(insertion_count(&spec, &NoiseModel::new(0.1, Placement::AfterEachGate).unwrap()), 20);
        assert_eq!(insertion_count(&spec, &NoiseModel::new(0.1, Placement::AfterEachLayer).unwrap()), 6);
    }

    #[test]
    fn zero_noise_equals_pure_execution() {
        let (spec, p) = small_circuit(2);
        let noise = NoiseModel::new(0.0, Placement::AfterEachGate).unwrap();
        let rho = execute_density(&spec, &p, &noise).unwrap();
        let psi = execute_from_zero(&spec, &p).unwrap();
        assert_abs_diff_eq!(rho.fidelity_with_pure(&psi).unwrap(), 1.0, epsilon = 1e-12);
        let mut r = rng::stream(0, 0);
        let traj = execute_trajectory(&spec, &p, &noise, &mut r).unwrap();
        assert_eq!(traj, psi);
    }

    #[test]
    fn noise_lowers_purity() {
        let (spec, p) = small_circuit(3);
        for placement in [Placement::AfterEachGate, Placement::AfterEachLayer] {
            let rho = execute_density(&spec, &p, &NoiseModel::new(0.01, placement).unwrap()).unwrap();
            assert!(rho.purity() < 1.0 - 1e-6);
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            assert!(rho.min_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn trajectories_match_density() {
        let (spec, p) = small_circuit(4);
        let h = Hamiltonian::tfim(4, 1.0, 1.0, Boundary::Open).unwrap();
        let noise = NoiseModel::new(0.05, Placement::AfterEachGate).unwrap();
        let exact = noisy_expectation(&h, &spec, &p, &noise, Backend::DensityMatrix).unwrap();
        let traj = noisy_expectation(&h, &spec, &p, &noise, Backend::Trajectories { count: 4000, seed: 9 }).unwrap();
        assert!((traj.value - exact.value).abs() < 3.0 * traj.stderr, "{traj:?} vs {exact:?}");
    }

    #[test]
    fn density_size_limit() {
        let spec = AnsatzSpec::build(Family::Heft, 11, 1, Entangler::CnotLadder).unwrap();
        let noise = NoiseModel::new(0.01, Placement::AfterEachGate).unwrap();
        assert!(matches!(
            execute_density(&spec, &ParameterVector::zeros(spec.num_params()), &noise),
            Err(Error::InvalidSize(_))
        ));
    }

    #[test]
    fn deterministic_outcomes() {
        let zero = Statevector::zero_state(1).unwrap();
        for shots in [1, 7, 1000] {
            let e = shot_expectation(&single(Pauli::Z), &zero, &ShotConfig::new(shots, 3).unwrap()).unwrap();
            assert_eq!((e.value, e.stderr), (1.0, 0.0));
        }
    }

    #[test]
    fn x_on_zero_concentrates() {
        let zero = Statevector::zero_state(1).unwrap();
        let e = shot_expectation(&single(Pauli::X), &zero, &ShotConfig::new(10_000, 1).unwrap()).unwrap();
        assert!(e.value.abs() <= 0.04);
    }

    #[test]
    fn basis_rotation_matches_expectation() {
        let mut r = rng::stream(5, 5);
        let psi = Statevector::haar_random(3, &mut r).unwrap();
        let h = Hamiltonian::xxz(3, 1.0, 0.7, Boundary::Periodic).unwrap();
        let exact = h.term_expectations(&psi).unwrap();
        for (t, e) in h.terms().iter().zip(exact) {
            let pp = plus_probability(&psi, t.masks(3).unwrap());
            assert_abs_diff_eq!(2.0 * pp - 1.0, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn shot_estimator_is_unbiased() {
        let mut r = rng::stream(6, 0);
        let psi = Statevector::haar_random(4, &mut r).unwrap();
        let h = Hamiltonian::tfim(4, 1.0, 1.0, Boundary::Open).unwrap();
        let exact = h.expectation(&psi).unwrap();
        let reps = 1000;
        let ests: Vec<Estimate> =
            (0..reps).map(|k| shot_expectation(&h, &psi, &ShotConfig::new(100, k).unwrap()).unwrap()).collect();
        let m = mean(&ests.iter().map(|e| e.value).collect::<Vec<_>>());
        let se = mean(&ests.iter().map(|e| e.stderr * e.stderr).collect::<Vec<_>>()).sqrt() / (reps as f64).sqrt();
        assert!((m - exact).abs() < 3.0 * se);
    }

    #[test]
    fn density_shots_match_pure_shots() {
        let (spec, p) = small_circuit(8);
        let h = Hamiltonian::tfim(4, 1.0, 0.5, Boundary::Open).unwrap();
        let psi = execute_from_zero(&spec, &p).unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let cfg = ShotConfig::new(500, 12).unwrap();
        let a = shot_expectation(&h, &psi, &cfg).unwrap();
        let b = shot_expectation_density(&h, &rho, &cfg).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
    }

    #[test]
    fn shot_gradient_consistency() {
        let (spec, p) = small_circuit(10);
        let h = Hamiltonian::tfim(4, 1.0, 1.0, Boundary::Open).unwrap();
        let exact = crate::gradient::parameter_shift_grad(&h, &spec, &p, crate::gradient::ParamIndex::One(3)).unwrap().values[0];
        let big = shot_parameter_shift(&h, &spec, &p, 3, &ShotConfig::new(1_000_000, 0).unwrap()).unwrap();
        assert!((big.value - exact).abs() < 5e-3);
    }

    #[test]
    fn mse_rows() {
        let spec = AnsatzSpec::build(Family::Heft, 3, 1, Entangler::CnotLadder).unwrap();
        let h = Hamiltonian::tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        let rows = mse_vs_shots(&h, &spec, &InitSpec::heft(1.0, 0), &[1, 100], 200).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].mse.is_finite());
        assert!(rows[1].mse < rows[0].mse);
    }
}
