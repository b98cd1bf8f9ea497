//! Dense density matrices.
//!
//! Storage is row-major, `rho[a * d + b]`, which is the same as a `2N`-qubit
//! amplitude vector whose first `N` qubits index the ket and last `N` the bra.
//! Gate kernels from the statevector engine are reused on that doubled
//! register, with the bra side conjugated.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::numeric::{pairwise_sum_by, pairwise_sum_complex_by};
use crate::pauli::{Hamiltonian, Pauli, PauliMasks};
use crate::statevector::{apply_kind, apply_single_qubit_matrix, GateOp, Statevector};
use crate::{Error, Result};

/// Density-matrix backends stop here (`4^10` entries).
pub const MAX_DENSITY_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    fn check_size(num_qubits: usize) -> Result<()> {
        if num_qubits == 0 || num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::InvalidSize(format!(
                "density matrix on {num_qubits} qubits (supported 1..={MAX_DENSITY_QUBITS})"
            )));
        }
        Ok(())
    }

    pub fn from_pure(state: &Statevector) -> Result<Self> {
        let n = state.num_qubits();
        Self::check_size(n)?;
        let a = state.amplitudes();
        let d = a.len();
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(a[i] * a[j].conj());
            }
        }
        Ok(DensityMatrix { num_qubits: n, data })
    }

    /// Wraps a matrix after checking Hermiticity and unit trace.
    pub fn from_matrix(num_qubits: usize, m: DMatrix<Complex64>) -> Result<Self> {
        Self::check_size(num_qubits)?;
        let d = 1usize << num_qubits;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
        }
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(m[(i, j)]);
            }
        }
        let rho = DensityMatrix { num_qubits, data };
        let herm = rho.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!("matrix not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("trace {tr} != 1")));
        }
        Ok(rho)
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        Self::check_size(num_qubits)?;
        let d = 1usize << num_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            data[i * d + i] = Complex64::new(1.0 / d as f64, 0.0);
        }
        Ok(DensityMatrix { num_qubits, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim() + j]
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.data[i * d + j])
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        pairwise_sum_by(0, d, &|i| self.data[i * d + i].re)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// `Tr(rho^2) = sum |rho_ij|^2` for Hermitian `rho`.
    pub fn purity(&self) -> f64 {
        pairwise_sum_by(0, self.data.len(), &|i| self.data[i].norm_sqr())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re.max(0.0)).collect()
    }

    /// `<psi|rho|psi>`.
    pub fn fidelity_with_pure(&self, state: &Statevector) -> Result<f64> {
        let d = self.dim();
        if state.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: state.dim() });
        }
        let a = state.amplitudes();
        let v = pairwise_sum_complex_by(0, d * d, &|k| {
            let (i, j) = (k / d, k % d);
            a[i].conj() * self.data[k] * a[j]
        });
        Ok(v.re.clamp(0.0, 1.0))
    }

    /// `rho -> U rho U^dagger`.
    pub fn apply_gate(&mut self, gate: &GateOp, theta: Option<f64>) -> Result<()> {
        // Validate through a zero-cost check on the logical register.
        gate.validate(self.num_qubits)?;
        let theta = match (gate.kind.is_parameterized(), theta) {
            (true, Some(t)) => t,
            (false, None) => 0.0,
            (true, None) => return Err(Error::Parameter(format!("{:?} needs an angle", gate.kind))),
            (false, Some(_)) => return Err(Error::Parameter(format!("{:?} takes no angle", gate.kind))),
        };
        let n = self.num_qubits;
        let bra: Vec<usize> = gate.wires.iter().map(|w| w + n).collect();
        apply_kind(&mut self.data, 2 * n, gate.kind, &gate.wires, theta, false);
        apply_kind(&mut self.data, 2 * n, gate.kind, &bra, theta, true);
        Ok(())
    }

    /// `rho -> M rho M^dagger` for a single-qubit matrix `M`.
    pub(crate) fn apply_single_qubit_matrix(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let n = self.num_qubits;
        let conj = [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]];
        apply_single_qubit_matrix(&mut self.data, 2 * n, q, m);
        apply_single_qubit_matrix(&mut self.data, 2 * n, n + q, conj);
    }

    /// `rho -> P rho P` for a single Pauli on qubit `q`.
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::InvalidWire { wire: q, num_qubits: self.num_qubits });
        }
        self.apply_single_qubit_matrix(q, p.matrix());
        Ok(())
    }

    /// Single-qubit depolarizing channel
    /// `(1 - p) rho + (p / 3) (X rho X + Y rho Y + Z rho Z)` on qubit `q`.
    pub fn apply_depolarizing(&mut self, q: usize, p: f64) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::InvalidWire { wire: q, num_qubits: self.num_qubits });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing probability {p}")));
        }
        if p == 0.0 {
            return Ok(());
        }
        let n = self.num_qubits;
        let kq = 1usize << (2 * n - 1 - q);
        let bq = 1usize << (n - 1 - q);
        let keep = 1.0 - 2.0 * p / 3.0;
        let mix = 2.0 * p / 3.0;
        let off = 1.0 - 4.0 * p / 3.0;
        for i in 0..self.data.len() {
            if i & (kq | bq) != 0 {
                continue;
            }
            let (i01, i10, i11) = (i | bq, i | kq, i | kq | bq);
            let r00 = self.data[i];
            let r11 = self.data[i11];
            self.data[i] = r00 * keep + r11 * mix;
            self.data[i11] = r11 * keep + r00 * mix;
            self.data[i01] *= off;
            self.data[i10] *= off;
        }
        Ok(())
    }

    /// `Tr(rho H)`.
    pub fn expectation(&self, h: &Hamiltonian) -> Result<f64> {
        let parts = self.term_expectations(h)?;
        let weighted: Vec<f64> = h.terms().iter().zip(&parts).map(|(t, v)| t.coeff * v).collect();
        Ok(crate::numeric::pairwise_sum(&weighted))
    }

    /// `Tr(rho P_t)` for every term, without coefficients.
    pub fn term_expectations(&self, h: &Hamiltonian) -> Result<Vec<f64>> {
        if h.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: h.num_qubits() });
        }
        let d = self.dim();
        h.terms()
            .iter()
            .map(|t| {
                let m: PauliMasks = t.masks(self.num_qubits)?;
                let s = pairwise_sum_complex_by(0, d, &|b| m.phase(b) * self.data[b * d + (b ^ m.x)]);
                if s.im.abs() > 1e-9 {
                    return Err(Error::Internal(format!("Tr(rho P) has imaginary part {:e}", s.im)));
                }
                Ok(s.re)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kraus_depolarize(rho: &DensityMatrix, q: usize, p: f64) -> DensityMatrix {
        // Explicit Kraus sum as an oracle.
        let mut out = rho.to_matrix() * Complex64::new(1.0 - p, 0.0);
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            let mut r = rho.clone();
            r.apply_pauli(q, pauli).unwrap();
            out += r.to_matrix() * Complex64::new(p / 3.0, 0.0);
        }
        DensityMatrix::from_matrix(rho.num_qubits(), out).unwrap()
    }

    fn random_rho(n: usize, seed: u64) -> DensityMatrix {
        let mut rng = crate::rng::stream(seed, 0);
        let a = Statevector::haar_random(n, &mut rng).unwrap();
        let b = Statevector::haar_random(n, &mut rng).unwrap();
        let ra = DensityMatrix::from_pure(&a).unwrap().to_matrix();
        let rb = DensityMatrix::from_pure(&b).unwrap().to_matrix();
        DensityMatrix::from_matrix(n, ra * Complex64::new(0.3, 0.0) + rb * Complex64::new(0.7, 0.0)).unwrap()
    }

    #[test]
    fn z_contraction_on_ground_state() {
        let mut rho = DensityMatrix::from_pure(&Statevector::zero_state(1).unwrap()).unwrap();
        rho.apply_depolarizing(0, 0.01).unwrap();
        let z = Hamiltonian::new(1, vec![crate::pauli::PauliTerm::new(1.0, [(0, Pauli::Z)]).unwrap()]).unwrap();
        assert_abs_diff_eq!(rho.expectation(&z).unwrap(), 1.0 - 4.0 * 0.01 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn channel_matches_kraus_sum() {
        let rho = random_rho(3, 5);
        for (q, p) in [(0, 0.1), (1, 0.37), (2, 0.75)] {
            let mut fast = rho.clone();
            fast.apply_depolarizing(q, p).unwrap();
            let slow = kraus_depolarize(&rho, q, p);
            let diff = (fast.to_matrix() - slow.to_matrix()).norm();
            assert!(diff < 1e-13, "q={q} p={p} diff={diff}");
        }
    }

    #[test]
    fn zero_and_full_depolarization() {
        let rho = random_rho(2, 9);
        let mut same = rho.clone();
        same.apply_depolarizing(1, 0.0).unwrap();
        assert_eq!(same, rho);

        let mut rng = crate::rng::stream(3, 0);
        let one = DensityMatrix::from_pure(&Statevector::haar_random(1, &mut rng).unwrap()).unwrap();
        let mut full = one.clone();
        full.apply_depolarizing(0, 0.75).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((full.to_matrix() - mixed.to_matrix()).norm() < 1e-15);
    }

    #[test]
    fn channel_preserves_trace_and_lowers_purity() {
        let mut rho = random_rho(3, 21);
        let before = rho.purity();
        rho.apply_depolarizing(2, 0.2).unwrap();
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert!(rho.hermiticity_error() < 1e-12);
        assert!(rho.purity() <= before + 1e-15);
        assert!(rho.min_eigenvalue() > -1e-12);
        assert!(rho.apply_depolarizing(3, 0.1).is_err());
    }

    #[test]
    fn unitary_evolution_matches_statevector() {
        use crate::statevector::GateKind;
        let mut rng = crate::rng::stream(4, 1);
        let mut psi = Statevector::haar_random(3, &mut rng).unwrap();
        let mut rho = DensityMatrix::from_pure(&psi).unwrap();
        let gates = [
            (GateOp::new(GateKind::Ry, vec![0], Some(0), 0).unwrap(), Some(0.3)),
            (GateOp::new(GateKind::PauliRotation2(Pauli::Y, Pauli::X), vec![2, 0], Some(1), 0).unwrap(), Some(-0.7)),
            (GateOp::new(GateKind::Rz, vec![1], Some(2), 0).unwrap(), Some(1.1)),
            (GateOp::new(GateKind::Cnot, vec![1, 2], None, 0).unwrap(), None),
            (GateOp::new(GateKind::Rx, vec![2], Some(3), 0).unwrap(), Some(0.2)),
            (GateOp::new(GateKind::H, vec![0], None, 0).unwrap(), None),
            (GateOp::new(GateKind::Cz, vec![0, 2], None, 0).unwrap(), None),
        ];
        for (g, t) in &gates {
            psi.apply_gate(g, *t).unwrap();
            rho.apply_gate(g, *t).unwrap();
        }
        let expected = DensityMatrix::from_pure(&psi).unwrap();
        assert!((rho.to_matrix() - expected.to_matrix()).norm() < 1e-13);
        assert_abs_diff_eq!(rho.fidelity_with_pure(&psi).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_matches_pure_state() {
        let mut rng = crate::rng::stream(8, 0);
        let psi = Statevector::haar_random(4, &mut rng).unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        for h in [
            Hamiltonian::tfim(4, 1.0, 0.8, crate::pauli::Boundary::Open).unwrap(),
            Hamiltonian::xxz(4, 1.0, 0.4, crate::pauli::Boundary::Periodic).unwrap(),
        ] {
            assert_abs_diff_eq!(rho.expectation(&h).unwrap(), h.expectation(&psi).unwrap(), epsilon = 1e-12);
        }
    }
}
