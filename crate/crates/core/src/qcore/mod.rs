//! Dense complex linear algebra on two-qubit state spaces.
//!
//! Basis ordering is hidden-qubit-first: `|00⟩, |01⟩, |10⟩, |11⟩`, where the
//! first index labels the hidden qubit and the second the measurement qubit.

mod eigen;
mod matrix;
pub mod random;

pub use eigen::{hermitian_eigen, normal_eigenvalues, spectral_norm, HermitianEigen};
pub use matrix::{
    evolve, kron, kron_capped, partial_trace_hidden, pauli_x, pauli_y, pauli_z, ComplexMatrix,
    DensityMatrix, MAX_DENSE_DIM,
};

/// Tolerance for structural invariants (unitarity, Hermiticity, unit trace).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Smallest eigenvalue accepted for a positive semidefinite state.
pub const PSD_TOL: f64 = -1e-10;
