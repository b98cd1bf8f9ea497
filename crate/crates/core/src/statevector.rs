//! Dense statevector engine.
//!
//! Amplitude index `b` encodes qubit `q` in bit `N - 1 - q`, i.e. qubit 0 is
//! the most significant bit. Parameterized gates use the full-angle
//! convention `exp(-i theta P)`.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::numeric::{binomial, pairwise_sum_by, pairwise_sum_complex_by};
use crate::pauli::{Pauli, PauliMasks};
use crate::{Error, Result, MAX_QUBITS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    /// `exp(-i theta P (x) Q)` on two wires.
    PauliRotation2(Pauli, Pauli),
    Cnot,
    Cz,
    H,
}

impl GateKind {
    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::PauliRotation2(..))
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::H => 1,
            _ => 2,
        }
    }

    /// Pauli generator for rotation kinds, as `(wire position, Pauli)` pairs.
    pub fn generator(self) -> Option<Vec<(usize, Pauli)>> {
        match self {
            GateKind::Rx => Some(vec![(0, Pauli::X)]),
            GateKind::Ry => Some(vec![(0, Pauli::Y)]),
            GateKind::Rz => Some(vec![(0, Pauli::Z)]),
            GateKind::PauliRotation2(a, b) => Some(vec![(0, a), (1, b)]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    #[serde(default)]
    pub param_slot: Option<usize>,
    /// Layer the gate belongs to; used by noise placement and init schedules.
    #[serde(default)]
    pub layer: usize,
}

impl GateOp {
    pub fn new(kind: GateKind, wires: Vec<usize>, param_slot: Option<usize>, layer: usize) -> Result<Self> {
        let g = GateOp { kind, wires, param_slot, layer };
        g.validate(usize::MAX)?;
        Ok(g)
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        if self.wires.len() != self.kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{:?} acts on {} wires, got {}",
                self.kind,
                self.kind.arity(),
                self.wires.len()
            )));
        }
        if self.wires.len() == 2 && self.wires[0] == self.wires[1] {
            return Err(Error::InvalidArgument(format!("repeated wire {}", self.wires[0])));
        }
        if let Some(&w) = self.wires.iter().find(|&&w| w >= num_qubits) {
            return Err(Error::InvalidWire { wire: w, num_qubits });
        }
        if self.kind.is_parameterized() != self.param_slot.is_some() {
            return Err(Error::Parameter(format!(
                "{:?} {} a parameter slot",
                self.kind,
                if self.kind.is_parameterized() { "requires" } else { "does not take" }
            )));
        }
        Ok(())
    }

    /// Operator norm of `G - I` for fixed gates (0 for identity-like gates).
    pub fn fixed_deviation(&self) -> f64 {
        match self.kind {
            GateKind::Cnot | GateKind::Cz | GateKind::H => 2.0,
            _ => 0.0,
        }
    }
}

#[inline]
fn bit(num_qubits: usize, q: usize) -> usize {
    1usize << (num_qubits - 1 - q)
}

/// Applies `exp(-i theta P)` for the Pauli string described by `masks`.
pub(crate) fn apply_pauli_rotation(amps: &mut [Complex64], masks: PauliMasks, theta: f64) {
    let (s, c) = theta.sin_cos();
    let mis = Complex64::new(0.0, -s);
    if masks.x == 0 {
        let yp = masks.y_phase();
        let plus = c + mis * yp;
        let minus = c - mis * yp;
        for (a, v) in amps.iter_mut().enumerate() {
            *v *= if (a & masks.z).count_ones().is_multiple_of(2) { plus } else { minus };
        }
        return;
    }
    let high = 1usize << (usize::BITS - 1 - masks.x.leading_zeros());
    for a in 0..amps.len() {
        if a & high != 0 {
            continue;
        }
        let b = a ^ masks.x;
        let va = amps[a];
        let vb = amps[b];
        amps[a] = va * c + mis * masks.phase(b) * vb;
        amps[b] = vb * c + mis * masks.phase(a) * va;
    }
}

/// Applies a 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
pub(crate) fn apply_single_qubit_matrix(amps: &mut [Complex64], num_qubits: usize, q: usize, m: [[Complex64; 2]; 2]) {
    let bq = bit(num_qubits, q);
    for a in 0..amps.len() {
        if a & bq != 0 {
            continue;
        }
        let b = a | bq;
        let v0 = amps[a];
        let v1 = amps[b];
        amps[a] = m[0][0] * v0 + m[0][1] * v1;
        amps[b] = m[1][0] * v0 + m[1][1] * v1;
    }
}

/// Applies a Pauli string (no rotation) in place.
pub(crate) fn apply_pauli_string(amps: &mut [Complex64], masks: PauliMasks) {
    if masks.x == 0 {
        for (a, v) in amps.iter_mut().enumerate() {
            *v *= masks.phase(a);
        }
        return;
    }
    let high = 1usize << (usize::BITS - 1 - masks.x.leading_zeros());
    for a in 0..amps.len() {
        if a & high != 0 {
            continue;
        }
        let b = a ^ masks.x;
        let va = amps[a];
        amps[a] = masks.phase(b) * amps[b];
        amps[b] = masks.phase(a) * va;
    }
}

fn hadamard() -> [[Complex64; 2]; 2] {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[r, r], [r, -r]]
}

/// Raw kernel dispatch on a register of `num_qubits`. `conjugate` applies the
/// complex-conjugated gate, used for the bra side of density matrices.
pub(crate) fn apply_kind(
    amps: &mut [Complex64],
    num_qubits: usize,
    kind: GateKind,
    wires: &[usize],
    theta: f64,
    conjugate: bool,
) {
    match kind {
        GateKind::Cnot => {
            let (bc, bt) = (bit(num_qubits, wires[0]), bit(num_qubits, wires[1]));
            for a in 0..amps.len() {
                if a & bc != 0 && a & bt == 0 {
                    amps.swap(a, a | bt);
                }
            }
        }
        GateKind::Cz => {
            let m = bit(num_qubits, wires[0]) | bit(num_qubits, wires[1]);
            for (a, v) in amps.iter_mut().enumerate() {
                if a & m == m {
                    *v = -*v;
                }
            }
        }
        GateKind::H => apply_single_qubit_matrix(amps, num_qubits, wires[0], hadamard()),
        _ => {
            let gen = kind.generator().expect("rotation kinds have generators");
            let masks = PauliMasks::new(gen.iter().map(|&(pos, p)| (wires[pos], p)), num_qubits)
                .expect("wires validated by caller");
            // conj(exp(-i t P)) = exp(i t conj(P)) and conj(P) = (-1)^ny P.
            let theta = if conjugate {
                if masks.ny.is_multiple_of(2) {
                    -theta
                } else {
                    theta
                }
            } else {
                theta
            };
            apply_pauli_rotation(amps, masks, theta);
        }
    }
}

impl Statevector {
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        Self::basis_state(num_qubits, 0)
    }

    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{num_qubits} qubits (supported 1..={MAX_QUBITS})")));
        }
        let d = 1usize << num_qubits;
        if index >= d {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {d}")));
        }
        let mut amps = vec![ZERO; d];
        amps[index] = ONE;
        Ok(Statevector { num_qubits, amps })
    }

    /// Builds a state and checks its length and normalization.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{num_qubits} qubits")));
        }
        if amps.len() != 1usize << num_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << num_qubits, found: amps.len() });
        }
        let s = Statevector { num_qubits, amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(s)
    }

    pub(crate) fn from_amplitudes_unchecked(num_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << num_qubits);
        Statevector { num_qubits, amps }
    }

    /// Haar-random pure state from normalized complex Gaussian amplitudes.
    pub fn haar_random(num_qubits: usize, rng: &mut crate::rng::Rng) -> Result<Self> {
        let d = 1usize << num_qubits;
        let mut amps: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = pairwise_sum_by(0, d, &|i| amps[i].norm_sqr()).sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        Self::from_amplitudes(num_qubits, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        pairwise_sum_by(0, self.amps.len(), &|i| self.amps[i].norm_sqr()).sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` in place. `theta` must be present exactly when the gate
    /// is parameterized.
    pub fn apply_gate(&mut self, gate: &GateOp, theta: Option<f64>) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let theta = match (gate.kind.is_parameterized(), theta) {
            (true, Some(t)) => t,
            (false, None) => 0.0,
            (true, None) => return Err(Error::Parameter(format!("{:?} needs an angle", gate.kind))),
            (false, Some(_)) => return Err(Error::Parameter(format!("{:?} takes no angle", gate.kind))),
        };
        apply_kind(&mut self.amps, self.num_qubits, gate.kind, &gate.wires, theta, false);
        Ok(())
    }

    /// Applies the inverse of `gate`.
    pub fn apply_gate_inverse(&mut self, gate: &GateOp, theta: Option<f64>) -> Result<()> {
        self.apply_gate(gate, theta.map(|t| -t))
    }

    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(pairwise_sum_complex_by(0, self.dim(), &|i| self.amps[i].conj() * other.amps[i]))
    }

    /// `|<a|b>|^2`.
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().clamp(0.0, 1.0))
    }

    fn check_cut(&self, keep: &[usize]) -> Result<Vec<usize>> {
        let mut k = keep.to_vec();
        k.sort_unstable();
        k.dedup();
        if k.len() != keep.len() {
            return Err(Error::InvalidArgument("repeated qubit in subsystem".into()));
        }
        if let Some(&w) = k.iter().find(|&&w| w >= self.num_qubits) {
            return Err(Error::InvalidWire { wire: w, num_qubits: self.num_qubits });
        }
        if k.is_empty() || k.len() == self.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "subsystem must be a non-empty proper subset, got {} of {} qubits",
                k.len(),
                self.num_qubits
            )));
        }
        Ok(k)
    }

    /// Amplitude matrix `M[a, e]` with rows over `keep` (sorted, first kept
    /// qubit most significant) and columns over the complement.
    fn bipartite_matrix(&self, keep: &[usize]) -> DMatrix<Complex64> {
        let n = self.num_qubits;
        let env: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let (dk, de) = (1usize << keep.len(), 1usize << env.len());
        let mut m = DMatrix::from_element(dk, de, ZERO);
        for (b, amp) in self.amps.iter().enumerate() {
            let pick = |qs: &[usize]| {
                qs.iter().fold(0usize, |acc, &q| (acc << 1) | ((b >> (n - 1 - q)) & 1))
            };
            m[(pick(keep), pick(&env))] = *amp;
        }
        m
    }

    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.check_cut(keep)?;
        let m = self.bipartite_matrix(&keep);
        let rho = &m * m.adjoint();
        DensityMatrix::from_matrix(keep.len(), rho)
    }

    /// Squared Schmidt coefficients across the cut via SVD of the amplitude matrix.
    pub fn schmidt_spectrum(&self, cut: &[usize]) -> Result<Vec<f64>> {
        let keep = self.check_cut(cut)?;
        let m = self.bipartite_matrix(&keep);
        let sv = m.singular_values();
        let mut out: Vec<f64> = sv.iter().map(|s| s * s).collect();
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(out)
    }

    /// Eigenvalues of the reduced state on the smaller side of the cut.
    fn cut_spectrum(&self, cut: &[usize]) -> Result<Vec<f64>> {
        let keep = self.check_cut(cut)?;
        let side: Vec<usize> = if 2 * keep.len() <= self.num_qubits {
            keep
        } else {
            (0..self.num_qubits).filter(|q| !keep.contains(q)).collect()
        };
        let rho = self.reduced_density_matrix(&side)?;
        Ok(SymmetricEigen::new(rho.to_matrix()).eigenvalues.iter().copied().collect())
    }

    /// Von Neumann entropy of the reduced state, in nats.
    pub fn entanglement_entropy(&self, cut: &[usize]) -> Result<f64> {
        let ev = self.cut_spectrum(cut)?;
        Ok(ev.iter().filter(|&&l| l > 1e-12).map(|&l| -l * l.ln()).sum::<f64>().max(0.0))
    }

    /// Rényi-2 entropy `-ln Tr(rho_A^2)`, in nats.
    pub fn renyi2_entropy(&self, cut: &[usize]) -> Result<f64> {
        Ok(-self.reduced_density_matrix(cut)?.purity().ln())
    }

    /// Probability mass per Hamming weight of the basis index.
    pub fn hamming_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.num_qubits + 1];
        for (b, a) in self.amps.iter().enumerate() {
            mass[b.count_ones() as usize] += a.norm_sqr();
        }
        mass
    }

    /// `sum_{w <= w*} C(N, w)` where `w*` is the smallest weight whose
    /// cumulative Hamming mass reaches `1 - mass_cutoff`.
    pub fn effective_dimension(&self, mass_cutoff: f64) -> Result<u128> {
        effective_dimension_from_mass(&self.hamming_mass(), mass_cutoff)
    }

    /// Little-endian dump: 16-byte header (`b"HEFTSV\0\0"`, version u32, N u32)
    /// followed by `(re, im)` f64 pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.dim());
        out.extend_from_slice(STATE_MAGIC);
        out.extend_from_slice(&STATE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.num_qubits as u32).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != STATE_MAGIC {
            return Err(Error::InvalidArgument("not a statevector dump".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != STATE_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported dump version {version}")));
        }
        let n = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{n} qubits in dump")));
        }
        let d = 1usize << n;
        if bytes.len() != 16 + 16 * d {
            return Err(Error::DimensionMismatch { expected: 16 + 16 * d, found: bytes.len() });
        }
        let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let amps = (0..d).map(|i| Complex64::new(f(16 + 16 * i), f(24 + 16 * i))).collect();
        Ok(Statevector { num_qubits: n, amps })
    }
}

const STATE_MAGIC: &[u8; 8] = b"HEFTSV\0\0";
const STATE_VERSION: u32 = 1;

pub fn effective_dimension_from_mass(mass: &[f64], mass_cutoff: f64) -> Result<u128> {
    if !(mass_cutoff > 0.0 && mass_cutoff < 1.0) {
        return Err(Error::InvalidArgument(format!("mass cutoff {mass_cutoff} outside (0, 1)")));
    }
    let n = mass.len() - 1;
    let mut cumulative = 0.0;
    let mut total = 0u128;
    for (w, m) in mass.iter().enumerate() {
        cumulative += m;
        total += binomial(n, w);
        if cumulative >= 1.0 - mass_cutoff {
            return Ok(total);
        }
    }
    Ok(total)
}

/// Converts nats to bits.
pub fn nats_to_bits(s: f64) -> f64 {
    s / LN_2
}

/// Haar-average purity of a `d_a`-dimensional subsystem of a random pure
/// state on `d_a * d_b` dimensions: `(d_a + d_b) / (d_a d_b + 1)`.
pub fn haar_average_purity(d_a: u64, d_b: u64) -> f64 {
    (d_a + d_b) as f64 / (d_a * d_b + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, LN_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> Statevector {
        Statevector::from_amplitudes(2, vec![c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(FRAC_1_SQRT_2, 0.0)]).unwrap()
    }

    fn ghz(n: usize) -> Statevector {
        let mut a = vec![ZERO; 1 << n];
        a[0] = c(FRAC_1_SQRT_2, 0.0);
        a[(1 << n) - 1] = c(FRAC_1_SQRT_2, 0.0);
        Statevector::from_amplitudes(n, a).unwrap()
    }

    fn plus(n: usize) -> Statevector {
        let d = 1 << n;
        Statevector::from_amplitudes(n, vec![c((1.0 / d as f64).sqrt(), 0.0); d]).unwrap()
    }

    fn rot(kind: GateKind, wires: Vec<usize>) -> GateOp {
        GateOp::new(kind, wires, Some(0), 0).unwrap()
    }

    #[test]
    fn zero_state_examples() {
        assert_eq!(Statevector::zero_state(1).unwrap().amplitudes(), &[ONE, ZERO]);
        assert_eq!(Statevector::zero_state(2).unwrap().amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(Statevector::zero_state(14).unwrap().norm(), 1.0);
        assert!(Statevector::zero_state(0).is_err());
        assert!(Statevector::zero_state(17).is_err());
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let x0 = GateOp::new(GateKind::Rx, vec![0], Some(0), 0).unwrap();
        let mut s = Statevector::zero_state(3).unwrap();
        s.apply_gate(&x0, Some(FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0b100].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rx_full_angle_convention() {
        let mut s = Statevector::zero_state(1).unwrap();
        s.apply_gate(&rot(GateKind::Rx, vec![0]), Some(FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_matrices_match_exponentials() {
        // exp(-i t P) = cos t I - i sin t P for each single-qubit Pauli.
        let t = 0.37;
        for (kind, p) in [(GateKind::Rx, Pauli::X), (GateKind::Ry, Pauli::Y), (GateKind::Rz, Pauli::Z)] {
            let pm = p.matrix();
            for input in 0..2 {
                let mut s = Statevector::basis_state(1, input).unwrap();
                s.apply_gate(&rot(kind, vec![0]), Some(t)).unwrap();
                for row in 0..2 {
                    let eye = if row == input { 1.0 } else { 0.0 };
                    let expected = c(t.cos() * eye, 0.0) + c(0.0, -t.sin()) * pm[row][input];
                    assert_abs_diff_eq!((s.amplitudes()[row] - expected).norm(), 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn cnot_flips_target() {
        let g = GateOp::new(GateKind::Cnot, vec![0, 1], None, 0).unwrap();
        let mut s = Statevector::basis_state(2, 0b10).unwrap();
        s.apply_gate(&g, None).unwrap();
        assert_eq!(s.amplitudes()[0b11], ONE);
    }

    #[test]
    fn zz_rotation_on_zero_is_phase() {
        let g = rot(GateKind::PauliRotation2(Pauli::Z, Pauli::Z), vec![0, 1]);
        let t = 0.8;
        let mut s = Statevector::zero_state(2).unwrap();
        s.apply_gate(&g, Some(t)).unwrap();
        assert_abs_diff_eq!((s.amplitudes()[0] - Complex64::from_polar(1.0, -t)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.probabilities()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn parameter_mismatch_errors() {
        let mut s = Statevector::zero_state(2).unwrap();
        assert!(matches!(s.apply_gate(&rot(GateKind::Ry, vec![0]), None), Err(Error::Parameter(_))));
        let h = GateOp::new(GateKind::H, vec![0], None, 0).unwrap();
        assert!(matches!(s.apply_gate(&h, Some(1.0)), Err(Error::Parameter(_))));
        let far = GateOp::new(GateKind::H, vec![5], None, 0).unwrap();
        assert!(matches!(s.apply_gate(&far, None), Err(Error::InvalidWire { .. })));
        assert!(GateOp::new(GateKind::Ry, vec![0], None, 0).is_err());
        assert!(GateOp::new(GateKind::Cz, vec![1, 1], None, 0).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let z = Statevector::zero_state(1).unwrap();
        let o = Statevector::basis_state(1, 1).unwrap();
        assert_eq!(z.fidelity(&z).unwrap(), 1.0);
        assert_eq!(z.fidelity(&o).unwrap(), 0.0);
        assert_abs_diff_eq!(z.fidelity(&plus(1)).unwrap(), 0.5, epsilon = 1e-15);
        assert!(z.fidelity(&plus(2)).is_err());
    }

    #[test]
    fn reduced_density_examples() {
        let rho = bell().reduced_density_matrix(&[0]).unwrap();
        let m = rho.to_matrix();
        assert_abs_diff_eq!(m[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)].norm(), 0.0, epsilon = 1e-15);

        let s01 = Statevector::basis_state(2, 0b01).unwrap();
        let m = s01.reduced_density_matrix(&[0]).unwrap().to_matrix();
        assert_eq!(m[(0, 0)], ONE);
        assert_eq!(m[(1, 1)], ZERO);

        assert!(bell().reduced_density_matrix(&[]).is_err());
        assert!(bell().reduced_density_matrix(&[0, 1]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(bell().entanglement_entropy(&[0]).unwrap(), LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(Statevector::zero_state(4).unwrap().entanglement_entropy(&[1, 3]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ghz(4).entanglement_entropy(&[0, 1]).unwrap(), LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(nats_to_bits(LN_2), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn purity_examples() {
        assert_abs_diff_eq!(bell().reduced_density_matrix(&[0]).unwrap().purity(), 0.5, epsilon = 1e-15);
        let pure = Statevector::basis_state(2, 2).unwrap().reduced_density_matrix(&[1]).unwrap();
        assert_abs_diff_eq!(pure.purity(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(DensityMatrix::maximally_mixed(6).unwrap().purity(), 1.0 / 64.0, epsilon = 1e-15);
    }

    #[test]
    fn hamming_mass_examples() {
        assert_eq!(Statevector::zero_state(3).unwrap().hamming_mass(), vec![1.0, 0.0, 0.0, 0.0]);
        let m = plus(2).hamming_mass();
        for (a, b) in m.iter().zip([0.25, 0.5, 0.25]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let m = ghz(3).hamming_mass();
        for (a, b) in m.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn effective_dimension_examples() {
        assert_eq!(Statevector::zero_state(8).unwrap().effective_dimension(1e-6).unwrap(), 1);
        assert_eq!(ghz(4).effective_dimension(1e-6).unwrap(), 16);
        assert!(ghz(4).effective_dimension(0.0).is_err());
        assert!(ghz(4).effective_dimension(1.0).is_err());

        // |+>^4 at cutoff 0.5: brute-force enumeration of basis states sorted by weight.
        let s = plus(4);
        let mut states: Vec<usize> = (0..16).collect();
        states.sort_by_key(|b| b.count_ones());
        let mut cum = 0.0;
        let mut w_star = 0;
        for w in 0..=4u32 {
            cum += states.iter().filter(|b| b.count_ones() == w).map(|&b| s.probabilities()[b]).sum::<f64>();
            if cum >= 0.5 {
                w_star = w;
                break;
            }
        }
        let expected = states.iter().filter(|b| b.count_ones() <= w_star).count() as u128;
        assert_eq!(expected, 11);
        assert_eq!(s.effective_dimension(0.5).unwrap(), expected);
    }

    #[test]
    fn schmidt_spectrum_matches_reduced_purity() {
        let mut rng = crate::rng::stream(11, 0);
        let s = Statevector::haar_random(5, &mut rng).unwrap();
        let spec = s.schmidt_spectrum(&[0, 3]).unwrap();
        let p: f64 = spec.iter().map(|l| l * l).sum();
        assert_abs_diff_eq!(p, s.reduced_density_matrix(&[0, 3]).unwrap().purity(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.renyi2_entropy(&[0, 3]).unwrap(), -p.ln(), epsilon = 1e-12);
    }

    #[test]
    fn haar_purity_formula() {
        assert_abs_diff_eq!(haar_average_purity(64, 64), 128.0 / 4097.0, epsilon = 1e-15);
        assert_abs_diff_eq!(haar_average_purity(2, 1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn binary_dump_layout() {
        let s = bell();
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 16 + 4 * 16);
        assert_eq!(&bytes[..8], b"HEFTSV\0\0");
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(Statevector::from_bytes(&bytes).unwrap(), s);
        assert!(Statevector::from_bytes(&bytes[..20]).is_err());
    }
}
