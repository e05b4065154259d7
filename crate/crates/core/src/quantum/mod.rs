//! Finite-dimensional operator algebra: tensor embeddings, Hamiltonian
//! assembly, exact Heisenberg evolution, spectra and Gaussian smoothing.

pub mod field;
pub mod lanczos;
mod operator;
pub mod sparse;
mod spectral;

pub use operator::{spin, Layout, LocalOperator, SELF_ADJOINT_TOL};
pub use spectral::{
    dense_sum, evolve_in_eigenbasis, gaussian_smooth, CommutatorPrep, Eigenvectors, Hamiltonian, SolverMode,
    SpectralModel, CLUSTER_TOL, DENSE_CAP, MIN_SPARSE_PAIRS,
};
