//! Layered ansatz circuits and their parameter initializers.
//!
//! Both families share one topology: every layer applies `RY` then `RZ` on
//! each qubit followed by a nearest-neighbour entangling chain. They differ
//! only in how parameters are drawn: the small-angle family uses
//! `theta ~ N(0, sigma^2)` with `sigma = kappa / (L * N)`, the hardware-efficient
//! baseline uses `theta ~ U[-pi, pi)`.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::pauli::Pauli;
use crate::statevector::{GateKind, GateOp, Statevector};
use crate::{rng, Error, Result};

/// Bound `M_tot <= C1 * L * N` on parameterized gates for the built topologies.
pub const C1: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Heft,
    Hea,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Heft => "heft",
            Family::Hea => "hea",
        }
    }

    /// The initializer this family is benchmarked with by default.
    pub fn default_init(self) -> InitFamily {
        match self {
            Family::Heft => InitFamily::HeftGaussian,
            Family::Hea => InitFamily::HeaUniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Entangler {
    #[default]
    CnotLadder,
    CzLadder,
    PauliZzRotation,
}

/// Which coupling prior a parameter slot uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateRole {
    Ry,
    Rz,
    Entangler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct AnsatzSpec {
    pub family: Family,
    #[serde(rename = "n")]
    num_qubits: usize,
    #[serde(rename = "l")]
    num_layers: usize,
    pub entangler: Entangler,
    gates: Vec<GateOp>,
    num_params: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    family: Family,
    n: usize,
    l: usize,
    entangler: Entangler,
    gates: Vec<GateOp>,
}

impl TryFrom<RawSpec> for AnsatzSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        AnsatzSpec::custom(r.family, r.entangler, r.n, r.l, r.gates)
    }
}

impl AnsatzSpec {
    /// Builds the shared layered topology.
    pub fn build(family: Family, n: usize, l: usize, entangler: Entangler) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("ansatz needs at least 2 qubits, got {n}")));
        }
        if l < 1 {
            return Err(Error::InvalidSize("ansatz needs at least 1 layer".into()));
        }
        if n > crate::MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{n} qubits")));
        }
        let mut gates = Vec::new();
        let mut slot = 0;
        let mut next = || {
            slot += 1;
            Some(slot - 1)
        };
        for layer in 0..l {
            for q in 0..n {
                gates.push(GateOp { kind: GateKind::Ry, wires: vec![q], param_slot: next(), layer });
                gates.push(GateOp { kind: GateKind::Rz, wires: vec![q], param_slot: next(), layer });
            }
            for q in 0..n - 1 {
                let wires = vec![q, q + 1];
                gates.push(match entangler {
                    Entangler::CnotLadder => GateOp { kind: GateKind::Cnot, wires, param_slot: None, layer },
                    Entangler::CzLadder => GateOp { kind: GateKind::Cz, wires, param_slot: None, layer },
                    Entangler::PauliZzRotation => GateOp {
                        kind: GateKind::PauliRotation2(Pauli::Z, Pauli::Z),
                        wires,
                        param_slot: next(),
                        layer,
                    },
                });
            }
        }
        AnsatzSpec::custom(family, entangler, n, l, gates)
    }

    /// Wraps an arbitrary gate list after checking wires and slot numbering.
    pub fn custom(family: Family, entangler: Entangler, n: usize, l: usize, gates: Vec<GateOp>) -> Result<Self> {
        if n == 0 || n > crate::MAX_QUBITS || l == 0 {
            return Err(Error::InvalidSize(format!("n={n}, l={l}")));
        }
        let mut slots = Vec::new();
        for g in &gates {
            g.validate(n)?;
            if g.layer >= l {
                return Err(Error::InvalidArgument(format!("gate layer {} >= {l}", g.layer)));
            }
            if let Some(s) = g.param_slot {
                slots.push(s);
            }
        }
        let num_params = slots.len();
        let mut sorted = slots.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::Parameter("parameter slots must be exactly 0..num_params".into()));
        }
        if num_params > C1 * l * n {
            return Err(Error::InvalidArgument(format!("{num_params} parameterized gates exceed {C1}*L*N")));
        }
        Ok(AnsatzSpec { family, num_qubits: n, num_layers: l, entangler, gates, num_params })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    /// Parameterized-gate count `M_tot`.
    pub fn m_tot(&self) -> usize {
        self.num_params
    }

    pub fn two_qubit_param_count(&self) -> usize {
        self.gates.iter().filter(|g| g.param_slot.is_some() && g.wires.len() == 2).count()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// `(layer, role)` of every parameter slot, indexed by slot.
    pub fn slot_roles(&self) -> Vec<(usize, GateRole)> {
        let mut roles = vec![(0, GateRole::Ry); self.num_params];
        for g in &self.gates {
            if let Some(s) = g.param_slot {
                let role = match g.kind {
                    GateKind::Ry | GateKind::Rx => GateRole::Ry,
                    GateKind::Rz => GateRole::Rz,
                    _ => GateRole::Entangler,
                };
                roles[s] = (g.layer, role);
            }
        }
        roles
    }

    /// `true` when every gate is a Pauli rotation, so the circuit is the
    /// identity at `theta = 0`.
    pub fn all_gates_parameterized(&self) -> bool {
        self.gates.iter().all(|g| g.param_slot.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("ansatz json: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitFamily {
    HeftGaussian,
    HeaUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPriors {
    #[serde(default = "unit")]
    pub ry: f64,
    #[serde(default = "unit")]
    pub rz: f64,
    #[serde(default = "unit")]
    pub entangler: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for CouplingPriors {
    fn default() -> Self {
        CouplingPriors { ry: 1.0, rz: 1.0, entangler: 1.0 }
    }
}

impl CouplingPriors {
    pub fn for_role(&self, role: GateRole) -> f64 {
        match role {
            GateRole::Ry => self.ry,
            GateRole::Rz => self.rz,
            GateRole::Entangler => self.entangler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub family: InitFamily,
    pub kappa: f64,
    /// Per-layer multiplier: layer `l` draws with `sigma * gamma^l`.
    pub gamma: f64,
    pub priors: CouplingPriors,
    pub seed: u64,
}

impl InitSpec {
    pub fn heft(kappa: f64, seed: u64) -> Self {
        InitSpec { family: InitFamily::HeftGaussian, kappa, gamma: 1.0, priors: CouplingPriors::default(), seed }
    }

    pub fn hea(seed: u64) -> Self {
        InitSpec { family: InitFamily::HeaUniform, kappa: 1.0, gamma: 1.0, priors: CouplingPriors::default(), seed }
    }

    /// Default initializer for `family`, with the given `kappa` for the Gaussian family.
    pub fn for_family(family: Family, kappa: f64, seed: u64) -> Self {
        match family {
            Family::Heft => InitSpec::heft(kappa, seed),
            Family::Hea => InitSpec::hea(seed),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `sigma = kappa / (L * N)`.
    pub fn sigma(&self, num_layers: usize, num_qubits: usize) -> f64 {
        self.kappa / (num_layers * num_qubits) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == InitFamily::HeftGaussian && !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {}", self.gamma)));
        }
        for p in [self.priors.ry, self.priors.rz, self.priors.entangler] {
            if !p.is_finite() {
                return Err(Error::InvalidArgument("non-finite coupling prior".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(ParameterVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        ParameterVector(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with `values[j] += delta`.
    pub fn shifted(&self, j: usize, delta: f64) -> Self {
        let mut v = self.0.clone();
        v[j] += delta;
        ParameterVector(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn draw_parameters(spec: &AnsatzSpec, init: &InitSpec) -> Result<ParameterVector> {
    init.validate()?;
    if spec.family.default_init() != init.family {
        return Err(Error::InvalidArgument(format!(
            "{:?} initializer is not compatible with the {} family",
            init.family,
            spec.family.name()
        )));
    }
    draw_unchecked(spec, init)
}

/// Draws from `init` regardless of the spec's family label.
pub fn draw_unchecked(spec: &AnsatzSpec, init: &InitSpec) -> Result<ParameterVector> {
    let mut rng = rng::stream(init.seed, 0);
    let values = match init.family {
        InitFamily::HeftGaussian => {
            let sigma = init.sigma(spec.num_layers(), spec.num_qubits());
            spec.slot_roles()
                .into_iter()
                .map(|(layer, role)| {
                    let s = sigma * init.gamma.powi(layer as i32);
                    let alpha = Normal::new(0.0, s)
                        .map_err(|e| Error::InvalidArgument(format!("sigma {s}: {e}")))?
                        .sample(&mut rng);
                    Ok(alpha * init.priors.for_role(role))
                })
                .collect::<Result<Vec<f64>>>()?
        }
        InitFamily::HeaUniform => (0..spec.num_params()).map(|_| rng.random_range(-PI..PI)).collect(),
    };
    ParameterVector::new(values)
}

fn check_len(spec: &AnsatzSpec, params: &ParameterVector) -> Result<()> {
    if params.len() != spec.num_params() {
        return Err(Error::DimensionMismatch { expected: spec.num_params(), found: params.len() });
    }
    Ok(())
}

/// Applies the circuit to `input`.
pub fn execute(spec: &AnsatzSpec, params: &ParameterVector, input: &Statevector) -> Result<Statevector> {
    check_len(spec, params)?;
    if input.num_qubits() != spec.num_qubits() {
        return Err(Error::DimensionMismatch { expected: spec.num_qubits(), found: input.num_qubits() });
    }
    let mut state = input.clone();
    for g in spec.gates() {
        state.apply_gate(g, g.param_slot.map(|s| params.values()[s]))?;
    }
    Ok(state)
}

pub fn execute_from_zero(spec: &AnsatzSpec, params: &ParameterVector) -> Result<Statevector> {
    execute(spec, params, &Statevector::zero_state(spec.num_qubits())?)
}

/// Applies `U(theta)^dagger` to `input`.
pub fn execute_inverse(spec: &AnsatzSpec, params: &ParameterVector, input: &Statevector) -> Result<Statevector> {
    check_len(spec, params)?;
    let mut state = input.clone();
    for g in spec.gates().iter().rev() {
        state.apply_gate_inverse(g, g.param_slot.map(|s| params.values()[s]))?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationBudget {
    /// `max |theta_k|` over all parameterized gates.
    pub epsilon: f64,
    /// `M_tot * epsilon` with `M_tot` counting every parameterized gate.
    pub delta: f64,
    /// `sum |theta_k|`.
    pub sum_abs: f64,
    pub m_tot: usize,
    /// The same budget restricted to two-qubit parameterized gates.
    pub epsilon_two_qubit: f64,
    pub delta_two_qubit: f64,
    pub m_two_qubit: usize,
}

pub fn localization_budget(spec: &AnsatzSpec, params: &ParameterVector) -> Result<LocalizationBudget> {
    check_len(spec, params)?;
    let theta = params.values();
    let epsilon = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let sum_abs = crate::numeric::pairwise_sum(&theta.iter().map(|t| t.abs()).collect::<Vec<_>>());
    let two: Vec<f64> = spec
        .gates()
        .iter()
        .filter(|g| g.wires.len() == 2)
        .filter_map(|g| g.param_slot.map(|s| theta[s].abs()))
        .collect();
    let epsilon_two_qubit = two.iter().fold(0.0f64, |m, t| m.max(*t));
    Ok(LocalizationBudget {
        epsilon,
        delta: spec.m_tot() as f64 * epsilon,
        sum_abs,
        m_tot: spec.m_tot(),
        epsilon_two_qubit,
        delta_two_qubit: two.len() as f64 * epsilon_two_qubit,
        m_two_qubit: two.len(),
    })
}
