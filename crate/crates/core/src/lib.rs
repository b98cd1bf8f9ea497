//! Statevector simulation and variational-circuit diagnostics for studying
//! barren plateaus under small-angle Gaussian initialization.
//!
//! The crate is organised bottom-up:
//!
//! - [`pauli`]: weighted Pauli strings, spin-chain Hamiltonians, Lanczos ground states.
//! - [`statevector`]: dense `2^N` amplitude engine, gates, reduced states, entropies.
//! - [`density`]: dense density matrices used by the noisy backends.
//! - [`ansatz`]: layered circuit IR and parameter initializers.
//! - [`gradient`]: parameter-shift and adjoint gradients, variance scans.
//! - [`vqe`]: Adam / SGD / RMSProp minimisation loop and solution-quality metrics.
//! - [`noise`]: depolarizing channels, trajectory sampling and finite-shot estimators.
//! - [`theory`]: numerical checks of circuit localization and 2-design distance.
//! - [`stats`]: Welch and Mann-Whitney tests with log-space tails.
//!
//! Qubit 0 is the most significant bit of an amplitude index throughout.

pub mod ansatz;
pub mod density;
pub mod error;
pub mod gradient;
pub mod noise;
pub mod numeric;
pub mod pauli;
pub mod rng;
pub mod stats;
pub mod statevector;
pub mod theory;
pub mod vqe;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Largest register the dense engines accept.
pub const MAX_QUBITS: usize = 16;
