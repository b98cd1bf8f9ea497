//! Pauli strings, spin-chain Hamiltonians and matrix-free eigensolving.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::numeric::{pairwise_sum_by, pairwise_sum_complex_by};
use crate::statevector::Statevector;
use crate::{rng, Error, Result, MAX_QUBITS};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        match self {
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -I], [I, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Bit masks describing the action of a Pauli string on computational basis
/// states: `P|b> = i^ny (-1)^popcount(b & z) |b ^ x>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub ny: u32,
}

impl PauliMasks {
    pub fn new(ops: impl IntoIterator<Item = (usize, Pauli)>, num_qubits: usize) -> Result<Self> {
        let mut masks = PauliMasks { x: 0, z: 0, ny: 0 };
        for (q, p) in ops {
            if q >= num_qubits {
                return Err(Error::InvalidWire { wire: q, num_qubits });
            }
            let bit = 1usize << (num_qubits - 1 - q);
            match p {
                Pauli::X => masks.x |= bit,
                Pauli::Y => {
                    masks.x |= bit;
                    masks.z |= bit;
                    masks.ny += 1;
                }
                Pauli::Z => masks.z |= bit,
            }
        }
        Ok(masks)
    }

    /// Global factor `i^ny`.
    pub fn y_phase(&self) -> Complex64 {
        match self.ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => I,
            2 => Complex64::new(-1.0, 0.0),
            _ => -I,
        }
    }

    /// `phi(b)` such that `P|b> = phi(b) |b ^ x>`.
    #[inline]
    pub fn phase(&self, b: usize) -> Complex64 {
        let sign = if (b & self.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        self.y_phase() * sign
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    /// Qubit index to Pauli; identity on absent qubits.
    pub paulis: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    pub fn new(coeff: f64, ops: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {coeff}")));
        }
        let mut paulis = BTreeMap::new();
        for (q, p) in ops {
            if paulis.insert(q, p).is_some() {
                return Err(Error::InvalidArgument(format!("qubit {q} repeated in Pauli term")));
            }
        }
        Ok(PauliTerm { coeff, paulis })
    }

    pub fn masks(&self, num_qubits: usize) -> Result<PauliMasks> {
        PauliMasks::new(self.paulis.iter().map(|(&q, &p)| (q, p)), num_qubits)
    }

    pub fn max_wire(&self) -> Option<usize> {
        self.paulis.keys().next_back().copied()
    }

    pub fn label(&self) -> String {
        if self.paulis.is_empty() {
            return "I".into();
        }
        self.paulis.iter().map(|(q, p)| format!("{p}{q}")).collect::<Vec<_>>().join(" ")
    }

    /// Returns `coeff * P |state>`; the input is left untouched.
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        let n = state.num_qubits();
        let masks = self.masks(n)?;
        let amps = state.amplitudes();
        let out: Vec<Complex64> = (0..amps.len())
            .map(|a| {
                let src = a ^ masks.x;
                masks.phase(src) * amps[src] * self.coeff
            })
            .collect();
        Ok(Statevector::from_amplitudes_unchecked(n, out))
    }
}

/// Free-function form of [`PauliTerm::apply`].
pub fn apply_term(term: &PauliTerm, state: &Statevector) -> Result<Statevector> {
    term.apply(state)
}

/// A Hermitian operator stored as a sum of weighted Pauli strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHamiltonian")]
pub struct Hamiltonian {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

#[derive(Deserialize)]
struct RawHamiltonian {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl TryFrom<RawHamiltonian> for Hamiltonian {
    type Error = Error;
    fn try_from(raw: RawHamiltonian) -> Result<Self> {
        Hamiltonian::new(raw.num_qubits, raw.terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

fn bonds(n: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut b: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic {
        b.push((n - 1, 0));
    }
    b
}

impl Hamiltonian {
    /// Validates indices and coefficients, merges duplicate Pauli strings by
    /// summing their coefficients and drops terms that end up exactly zero.
    pub fn new(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{num_qubits} qubits (supported 1..={MAX_QUBITS})")));
        }
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if !t.coeff.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient {}", t.coeff)));
            }
            if let Some(w) = t.max_wire() {
                if w >= num_qubits {
                    return Err(Error::InvalidWire { wire: w, num_qubits });
                }
            }
            match merged.iter_mut().find(|m| m.paulis == t.paulis) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        Ok(Hamiltonian { num_qubits, terms: merged })
    }

    /// `H = -J sum Z_i Z_{i+1} - h sum X_i`.
    pub fn tfim(n: usize, coupling_j: f64, field_h: f64, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("TFIM needs at least 2 qubits, got {n}")));
        }
        let mut terms = Vec::new();
        for (a, b) in bonds(n, boundary) {
            terms.push(PauliTerm::new(-coupling_j, [(a, Pauli::Z), (b, Pauli::Z)])?);
        }
        for q in 0..n {
            terms.push(PauliTerm::new(-field_h, [(q, Pauli::X)])?);
        }
        Hamiltonian::new(n, terms)
    }

    /// `H = J sum (X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1})`.
    pub fn xxz(n: usize, coupling_j: f64, delta: f64, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("XXZ needs at least 2 qubits, got {n}")));
        }
        let mut terms = Vec::new();
        for (a, b) in bonds(n, boundary) {
            terms.push(PauliTerm::new(coupling_j, [(a, Pauli::X), (b, Pauli::X)])?);
            terms.push(PauliTerm::new(coupling_j, [(a, Pauli::Y), (b, Pauli::Y)])?);
            terms.push(PauliTerm::new(coupling_j * delta, [(a, Pauli::Z), (b, Pauli::Z)])?);
        }
        Hamiltonian::new(n, terms)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// `sum |c_i|`, an upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("Hamiltonian serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("hamiltonian json: {e}")))
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        let expected = 1usize << self.num_qubits;
        if len != expected {
            return Err(Error::DimensionMismatch { expected, found: len });
        }
        Ok(())
    }

    fn all_masks(&self) -> Vec<(f64, PauliMasks)> {
        self.terms
            .iter()
            .map(|t| (t.coeff, t.masks(self.num_qubits).expect("validated at construction")))
            .collect()
    }

    /// `out = H v` on raw amplitude slices (no normalization requirement).
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.check_dim(v.len())?;
        self.check_dim(out.len())?;
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (c, m) in self.all_masks() {
            for (a, o) in out.iter_mut().enumerate() {
                let src = a ^ m.x;
                *o += m.phase(src) * v[src] * c;
            }
        }
        Ok(())
    }

    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
        self.apply_into(state.amplitudes(), &mut out)?;
        Ok(Statevector::from_amplitudes_unchecked(self.num_qubits, out))
    }

    /// `<v|H|v>` as a complex number, no normalization check.
    pub fn raw_expectation(&self, v: &[Complex64]) -> Result<Complex64> {
        self.check_dim(v.len())?;
        let mut total = Complex64::new(0.0, 0.0);
        for (c, m) in self.all_masks() {
            let s = pairwise_sum_complex_by(0, v.len(), &|a| {
                let src = a ^ m.x;
                v[a].conj() * m.phase(src) * v[src]
            });
            total += s * c;
        }
        Ok(total)
    }

    /// `<psi|H|psi>` for a normalized state.
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        self.check_dim(state.dim())?;
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        let e = self.raw_expectation(state.amplitudes())?;
        let tol = 1e-10 * self.norm_bound().max(1.0);
        if e.im.abs() > tol {
            return Err(Error::Internal(format!("expectation has imaginary part {:e}", e.im)));
        }
        Ok(e.re)
    }

    /// Per-term expectation values `<P_t>` (without coefficients).
    pub fn term_expectations(&self, state: &Statevector) -> Result<Vec<f64>> {
        self.check_dim(state.dim())?;
        let v = state.amplitudes();
        Ok(self
            .all_masks()
            .into_iter()
            .map(|(_, m)| {
                pairwise_sum_by(0, v.len(), &|a| {
                    let src = a ^ m.x;
                    (v[a].conj() * m.phase(src) * v[src]).re
                })
            })
            .collect())
    }

    /// Dense matrix, intended for oracles and small registers.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.num_qubits > 12 {
            return Err(Error::InvalidSize(format!("dense matrix for {} qubits", self.num_qubits)));
        }
        let d = 1usize << self.num_qubits;
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (c, masks) in self.all_masks() {
            for b in 0..d {
                m[(b ^ masks.x, b)] += masks.phase(b) * c;
            }
        }
        Ok(m)
    }
}

/// Spin-chain family that can be instantiated at any size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum HamiltonianModel {
    Tfim {
        #[serde(default = "one")]
        j: f64,
        #[serde(default = "one")]
        h: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    Xxz {
        #[serde(default = "one")]
        j: f64,
        #[serde(default = "one")]
        delta: f64,
        #[serde(default)]
        boundary: Boundary,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for HamiltonianModel {
    fn default() -> Self {
        HamiltonianModel::Tfim { j: 1.0, h: 1.0, boundary: Boundary::Open }
    }
}

impl HamiltonianModel {
    pub fn build(&self, n: usize) -> Result<Hamiltonian> {
        match *self {
            HamiltonianModel::Tfim { j, h, boundary } => Hamiltonian::tfim(n, j, h, boundary),
            HamiltonianModel::Xxz { j, delta, boundary } => Hamiltonian::xxz(n, j, delta, boundary),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HamiltonianModel::Tfim { .. } => "tfim",
            HamiltonianModel::Xxz { .. } => "xxz",
        }
    }
}

/// Lowest eigenvalue and an orthonormal basis of its eigenspace.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    pub energy: f64,
    pub states: Vec<Statevector>,
    pub residual: f64,
}

impl GroundSpace {
    /// Overlap with the projector onto the ground space.
    pub fn fidelity(&self, state: &Statevector) -> Result<f64> {
        let mut f = 0.0;
        for g in &self.states {
            f += g.fidelity(state)?;
        }
        Ok(f.min(1.0))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { krylov_dim: 60, max_restarts: 400, seed: 0x5EED }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    pairwise_sum_complex_by(0, a.len(), &|i| a[i].conj() * b[i])
}

fn norm(a: &[Complex64]) -> f64 {
    pairwise_sum_by(0, a.len(), &|i| a[i].norm_sqr()).sqrt()
}

fn orthogonalize(w: &mut [Complex64], against: &[Vec<Complex64>]) {
    for u in against {
        let c = dot(u, w);
        w.iter_mut().zip(u).for_each(|(wi, ui)| *wi -= c * ui);
    }
}

/// Restarted Lanczos for the lowest eigenpair of `h` restricted to the
/// orthogonal complement of `locked`. Returns `(energy, vector, residual)`.
fn lowest_in_complement(
    h: &Hamiltonian,
    locked: &[Vec<Complex64>],
    tol: f64,
    opts: &LanczosOptions,
) -> Result<(f64, Vec<Complex64>, f64)> {
    let d = 1usize << h.num_qubits();
    let avail = d - locked.len();
    let m = opts.krylov_dim.min(avail).max(1);

    let mut rng = rng::stream(opts.seed, locked.len() as u64);
    let mut v: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
    orthogonalize(&mut v, locked);
    orthogonalize(&mut v, locked);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![Complex64::new(0.0, 0.0); d];
    let mut last_residual = f64::INFINITY;
    for _restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for k in 0..m {
            h.apply_into(&basis[k], &mut w)?;
            orthogonalize(&mut w, locked);
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            w.iter_mut().zip(&basis[k]).for_each(|(wi, bi)| *wi -= a * bi);
            if k > 0 {
                let b = beta[k - 1];
                w.iter_mut().zip(&basis[k - 1]).for_each(|(wi, bi)| *wi -= b * bi);
            }
            for _ in 0..2 {
                orthogonalize(&mut w, &basis);
                orthogonalize(&mut w, locked);
            }
            let b = norm(&w);
            if k + 1 == m || b < 1e-13 {
                beta.push(b);
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty tridiagonal");
        let s = eig.eigenvectors.column(idx);
        let mut ritz = vec![Complex64::new(0.0, 0.0); d];
        for (j, b) in basis.iter().enumerate() {
            let sj = s[j];
            ritz.iter_mut().zip(b).for_each(|(r, bj)| *r += sj * bj);
        }
        orthogonalize(&mut ritz, locked);
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nr);

        h.apply_into(&ritz, &mut w)?;
        orthogonalize(&mut w, locked);
        let energy = dot(&ritz, &w).re;
        w.iter_mut().zip(&ritz).for_each(|(wi, ri)| *wi -= energy * ri);
        last_residual = norm(&w);
        if last_residual <= tol || k == avail {
            return Ok((energy, ritz, last_residual));
        }
        v = ritz;
    }
    Err(Error::Convergence { iterations: opts.max_restarts, residual: last_residual })
}

/// Lowest eigenpair with `||H g - E g|| <= tol`.
pub fn ground_state(h: &Hamiltonian, tol: f64) -> Result<(f64, Statevector)> {
    let (e, v, _) = lowest_in_complement(h, &[], tol, &LanczosOptions::default())?;
    Ok((e, Statevector::from_amplitudes_unchecked(h.num_qubits(), v)))
}

/// Ground energy plus an orthonormal basis of every eigenvector whose energy
/// lies within `degeneracy_tol` of it.
pub fn ground_space(h: &Hamiltonian, tol: f64, degeneracy_tol: f64) -> Result<GroundSpace> {
    let opts = LanczosOptions::default();
    let d = 1usize << h.num_qubits();
    let (e0, v0, r0) = lowest_in_complement(h, &[], tol, &opts)?;
    let mut locked = vec![v0];
    let mut residual = r0;
    while locked.len() < d {
        let (e, v, r) = lowest_in_complement(h, &locked, tol, &opts)?;
        if e - e0 > degeneracy_tol {
            break;
        }
        residual = residual.max(r);
        locked.push(v);
    }
    let n = h.num_qubits();
    Ok(GroundSpace {
        energy: e0,
        states: locked.into_iter().map(|v| Statevector::from_amplitudes_unchecked(n, v)).collect(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dense_ground_energy(h: &Hamiltonian) -> f64 {
        let m = h.to_dense().unwrap();
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn tfim_term_counts() {
        let h = Hamiltonian::tfim(2, 1.0, 1.0, Boundary::Open).unwrap();
        let zz: Vec<_> = h.terms().iter().filter(|t| t.paulis.len() == 2).collect();
        let x: Vec<_> = h.terms().iter().filter(|t| t.paulis.len() == 1).collect();
        assert_eq!(zz.len(), 1);
        assert_eq!(zz[0].coeff, -1.0);
        assert_eq!(x.len(), 2);
        assert!(x.iter().all(|t| t.coeff == -1.0));

        let p = Hamiltonian::tfim(5, 1.0, 0.5, Boundary::Periodic).unwrap();
        assert_eq!(p.terms().len(), 10);
    }

    #[test]
    fn xxz_term_count() {
        let h = Hamiltonian::xxz(3, 1.0, 1.0, Boundary::Open).unwrap();
        assert_eq!(h.terms().len(), 6);
    }

    #[test]
    fn size_errors() {
        assert!(matches!(Hamiltonian::tfim(1, 1.0, 1.0, Boundary::Open), Err(Error::InvalidSize(_))));
        assert!(matches!(Hamiltonian::xxz(1, 1.0, 1.0, Boundary::Open), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn duplicates_merge() {
        let t = PauliTerm::new(0.5, [(0, Pauli::Z)]).unwrap();
        let h = Hamiltonian::new(2, vec![t.clone(), t]).unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].coeff, 1.0);
    }

    #[test]
    fn invalid_wire_rejected() {
        let t = PauliTerm::new(1.0, [(3, Pauli::X)]).unwrap();
        assert_eq!(Hamiltonian::new(2, vec![t.clone()]), Err(Error::InvalidWire { wire: 3, num_qubits: 2 }));
        let s = Statevector::zero_state(2).unwrap();
        assert!(matches!(t.apply(&s), Err(Error::InvalidWire { .. })));
    }

    #[test]
    fn apply_term_examples() {
        let zero = Statevector::zero_state(1).unwrap();
        let z = PauliTerm::new(1.0, [(0, Pauli::Z)]).unwrap();
        assert_eq!(z.apply(&zero).unwrap().amplitudes(), zero.amplitudes());

        let x = PauliTerm::new(1.0, [(0, Pauli::X)]).unwrap();
        let out = x.apply(&zero).unwrap();
        assert_eq!(out.amplitudes()[1], Complex64::new(1.0, 0.0));
        assert_eq!(out.amplitudes()[0], Complex64::new(0.0, 0.0));

        let y = PauliTerm::new(2.0, [(0, Pauli::Y)]).unwrap();
        let out = y.apply(&zero).unwrap();
        assert_eq!(out.amplitudes()[1], Complex64::new(0.0, 2.0));
        assert_eq!(out.amplitudes()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn masks_match_kronecker_products() {
        // Compare P|b> against explicit tensor products on 3 qubits.
        let ops = [(0, Pauli::Y), (1, Pauli::Z), (2, Pauli::X)];
        let term = PauliTerm::new(1.0, ops).unwrap();
        let kron = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a.kronecker(b);
        let m = |p: Pauli| {
            let a = p.matrix();
            DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
        };
        let full = kron(&kron(&m(Pauli::Y), &m(Pauli::Z)), &m(Pauli::X));
        let dense = Hamiltonian::new(3, vec![term]).unwrap().to_dense().unwrap();
        assert_eq!(full, dense);
    }

    #[test]
    fn expectation_examples() {
        let h = Hamiltonian::tfim(2, 1.0, 1.0, Boundary::Open).unwrap();
        let s = Statevector::zero_state(2).unwrap();
        assert_abs_diff_eq!(h.expectation(&s).unwrap(), -1.0, epsilon = 1e-14);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = Statevector::from_amplitudes(
            2,
            vec![0.0.into(), r.into(), (-r).into(), 0.0.into()],
        )
        .unwrap();
        let x = Hamiltonian::xxz(2, 1.0, 1.0, Boundary::Open).unwrap();
        assert_abs_diff_eq!(x.expectation(&singlet).unwrap(), -3.0, epsilon = 1e-12);

        let plus = Statevector::from_amplitudes(3, vec![Complex64::new((1.0f64 / 8.0).sqrt(), 0.0); 8]).unwrap();
        let h3 = Hamiltonian::tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        assert_abs_diff_eq!(h3.expectation(&plus).unwrap(), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_errors() {
        let h = Hamiltonian::tfim(2, 1.0, 1.0, Boundary::Open).unwrap();
        let s3 = Statevector::zero_state(3).unwrap();
        assert!(matches!(h.expectation(&s3), Err(Error::DimensionMismatch { .. })));
        let bad = Statevector::from_amplitudes_unchecked(2, vec![Complex64::new(2.0, 0.0), 0.0.into(), 0.0.into(), 0.0.into()]);
        assert!(matches!(h.expectation(&bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn dense_oracle_small_cases() {
        let t = Hamiltonian::tfim(2, 1.0, 1.0, Boundary::Open).unwrap();
        assert_abs_diff_eq!(dense_ground_energy(&t), -(5.0f64).sqrt(), epsilon = 1e-12);
        let x = Hamiltonian::xxz(2, 1.0, 1.0, Boundary::Open).unwrap();
        assert_abs_diff_eq!(dense_ground_energy(&x), -3.0, epsilon = 1e-12);
        let xx = Hamiltonian::xxz(2, 1.0, 0.0, Boundary::Open).unwrap();
        assert_abs_diff_eq!(dense_ground_energy(&xx), -2.0, epsilon = 1e-12);
        let classical = Hamiltonian::tfim(4, 1.0, 0.0, Boundary::Open).unwrap();
        assert_abs_diff_eq!(dense_ground_energy(&classical), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_dense() {
        for h in [
            Hamiltonian::tfim(2, 1.0, 1.0, Boundary::Open).unwrap(),
            Hamiltonian::xxz(2, 1.0, 1.0, Boundary::Open).unwrap(),
            Hamiltonian::tfim(8, 1.0, 1.0, Boundary::Open).unwrap(),
            Hamiltonian::xxz(6, 1.0, 0.5, Boundary::Periodic).unwrap(),
            Hamiltonian::tfim(7, 0.7, 1.3, Boundary::Periodic).unwrap(),
        ] {
            let (e, g) = ground_state(&h, 1e-9).unwrap();
            assert_abs_diff_eq!(e, dense_ground_energy(&h), epsilon = 1e-8);
            assert_abs_diff_eq!(h.expectation(&g).unwrap(), e, epsilon = 1e-8);
            let hg = h.apply(&g).unwrap();
            let res: f64 = hg
                .amplitudes()
                .iter()
                .zip(g.amplitudes())
                .map(|(a, b)| (a - b * e).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9, "residual {res}");
        }
    }

    #[test]
    fn degenerate_ground_space_is_found() {
        // Classical Ising chain: |0000> and |1111> are degenerate.
        let h = Hamiltonian::tfim(4, 1.0, 0.0, Boundary::Open).unwrap();
        let gs = ground_space(&h, 1e-10, 1e-8).unwrap();
        assert_abs_diff_eq!(gs.energy, -3.0, epsilon = 1e-9);
        assert_eq!(gs.states.len(), 2);
        let zero = Statevector::zero_state(4).unwrap();
        assert_abs_diff_eq!(gs.fidelity(&zero).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn json_round_trip_and_schema() {
        let h = Hamiltonian::tfim(3, 1.0, 0.5, Boundary::Open).unwrap();
        let s = h.to_json();
        assert!(s.contains("\"coeff\"") && s.contains("\"paulis\"") && s.contains("\"0\": \"Z\""));
        assert_eq!(Hamiltonian::from_json(&s).unwrap(), h);
        let bad = r#"{"num_qubits": 2, "terms": [{"coeff": 1.0, "paulis": {"5": "X"}}]}"#;
        assert!(Hamiltonian::from_json(bad).is_err());
    }
}
