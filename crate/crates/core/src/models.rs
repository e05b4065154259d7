//! Standard chain Hamiltonians used across the experiments.

use crate::error::Result;
use crate::linalg::{CMat, C64};
use crate::lrbounds::Interaction;
use crate::quantum::spin::{heisenberg_bond, pauli_x, pauli_z};
use crate::quantum::LocalOperator;

fn chain_bonds(n: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut b: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if periodic && n > 2 {
        b.push((0, n - 1));
    }
    b
}

fn bond_interaction(n: usize, periodic: bool, d: usize, m: &CMat) -> Result<Interaction> {
    let ops = chain_bonds(n, periodic)
        .into_iter()
        .map(|(x, y)| LocalOperator::new(vec![x, y], vec![d, d], m.clone()))
        .collect::<Result<Vec<_>>>()?;
    Interaction::from_terms(ops)
}

/// Φ({i, i+1}) = J σ³_i σ³_{i+1} on an open chain.
pub fn ising_bonds(n: usize, j: f64) -> Result<Interaction> {
    let zz = pauli_z().kronecker(&pauli_z()) * C64::new(j, 0.0);
    bond_interaction(n, false, 2, &zz)
}

/// Transverse-field Ising chain H = −J Σ σ³σ³ − h Σ σ¹: bonds as the
/// interaction, fields as on-site terms.
pub fn tfim(n: usize, j: f64, h: f64, periodic: bool) -> Result<(Interaction, Vec<LocalOperator>)> {
    let zz = pauli_z().kronecker(&pauli_z()) * C64::new(-j, 0.0);
    let phi = bond_interaction(n, periodic, 2, &zz)?;
    let onsite = (0..n).map(|x| LocalOperator::single(x, pauli_x() * C64::new(-h, 0.0))).collect();
    Ok((phi, onsite))
}

/// Spin-1/2 Heisenberg chain with bonds J S·S.
pub fn heisenberg(n: usize, j: f64, periodic: bool) -> Result<Interaction> {
    let b = heisenberg_bond(2) * C64::new(j, 0.0);
    bond_interaction(n, periodic, 2, &b)
}

/// AKLT chain Σ P^{(2)} on spin-1 sites.
pub fn aklt(n: usize, periodic: bool) -> Result<Interaction> {
    bond_interaction(n, periodic, 3, &crate::aklt::aklt_bond_matrix())
}

/// Chain interaction with an arbitrary two-site bond matrix.
pub fn chain_with_bond(n: usize, periodic: bool, d: usize, bond: &CMat) -> Result<Interaction> {
    bond_interaction(n, periodic, d, bond)
}
