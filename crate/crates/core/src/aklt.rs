//! The AKLT chain: bond projector, the finitely correlated ground state
//! through its transfer map, reduced densities, gaps and the factorization
//! property of local ground spaces.

use crate::error::{domain, resource, Result};
use crate::linalg::{eigh, CMat, C64, ONE, ZERO};
use crate::models::chain_with_bond;
use crate::quantum::spin::{heisenberg_bond, spin_matrices};
use crate::quantum::{Layout, SolverMode, SpectralModel};
use crate::report::{fmt17, Table};
use nalgebra::DVector;
use serde::Serialize;

/// (1/3) + (1/2) S·S + (1/6)(S·S)² on two spin-1 sites.
pub fn aklt_bond_matrix() -> CMat {
    let ss = heisenberg_bond(3);
    let id = CMat::identity(9, 9);
    id * C64::new(1.0 / 3.0, 0.0) + &ss * C64::new(0.5, 0.0) + (&ss * &ss) * C64::new(1.0 / 6.0, 0.0)
}

/// W: C³ → C² ⊗ C² onto the triplet, V: C² → C³ ⊗ C² built from the singlet φ.
#[derive(Clone, Debug)]
pub struct Intertwiners {
    pub w: CMat,
    pub v: CMat,
    pub c: f64,
    pub phi: DVector<C64>,
}

impl Default for Intertwiners {
    fn default() -> Self {
        Self::new()
    }
}

impl Intertwiners {
    /// Spin-1 basis m = 1, 0, −1; spin-1/2 basis ↑, ↓.
    pub fn new() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut w = CMat::zeros(4, 3);
        w[(0, 0)] = ONE;
        w[(1, 1)] = C64::new(r, 0.0);
        w[(2, 1)] = C64::new(r, 0.0);
        w[(3, 2)] = ONE;
        Self::from_w(w)
    }

    /// Intertwiners for an arbitrary isometry W (e.g. W U for a basis change U).
    pub fn from_w(w: CMat) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let phi = DVector::from_vec(vec![ZERO, C64::new(r, 0.0), C64::new(-r, 0.0), ZERO]);
        let mut raw = CMat::zeros(6, 2);
        for alpha in 0..2 {
            for m in 0..3 {
                for gamma in 0..2 {
                    let mut acc = ZERO;
                    for beta in 0..2 {
                        acc += w[(alpha * 2 + beta, m)].conj() * phi[beta * 2 + gamma];
                    }
                    raw[(m * 2 + gamma, alpha)] = acc;
                }
            }
        }
        let c = 1.0 / raw.column(0).norm();
        Intertwiners { w, v: raw * C64::new(c, 0.0), c, phi }
    }

    /// (‖W†W − 1‖, ‖V†V − 1‖).
    pub fn isometry_defects(&self) -> (f64, f64) {
        let ww = self.w.adjoint() * &self.w - CMat::identity(3, 3);
        let vv = self.v.adjoint() * &self.v - CMat::identity(2, 2);
        (crate::linalg::op_norm(&ww), crate::linalg::op_norm(&vv))
    }

    pub fn transfer_map(&self, a: &CMat) -> TransferMap {
        let mut m = CMat::zeros(4, 4);
        for j in 0..2 {
            for i in 0..2 {
                let mut b = CMat::zeros(2, 2);
                b[(i, j)] = ONE;
                let e = self.v.adjoint() * a.kronecker(&b) * &self.v;
                for q in 0..2 {
                    for p in 0..2 {
                        m[(p + 2 * q, i + 2 * j)] = e[(p, q)];
                    }
                }
            }
        }
        TransferMap { matrix: m }
    }
}

/// B ↦ V†(A ⊗ B)V as a 4×4 matrix on column-stacked 2×2 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMap {
    pub matrix: CMat,
}

fn vec2(b: &CMat) -> DVector<C64> {
    DVector::from_iterator(4, b.iter().copied())
}

fn unvec2(v: &DVector<C64>) -> CMat {
    CMat::from_column_slice(2, 2, v.as_slice())
}

impl TransferMap {
    pub fn apply(&self, b: &CMat) -> CMat {
        unvec2(&(&self.matrix * vec2(b)))
    }

    /// Eigenvalues sorted by decreasing real part.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let schur = nalgebra::Schur::new(self.matrix.clone());
        let mut ev: Vec<C64> = schur.eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        ev
    }
}

/// Transfer map of the AKLT state for observable A.
pub fn transfer_map(a: &CMat) -> TransferMap {
    Intertwiners::new().transfer_map(a)
}

/// ½ Tr E_{A₁}∘…∘E_{Aₙ}(1), with A₁ on the leftmost site.
pub fn fcs_expectation(ops: &[CMat]) -> Result<C64> {
    if ops.iter().any(|a| a.shape() != (3, 3)) {
        return domain("observables must be 3×3");
    }
    let iw = Intertwiners::new();
    let mut b = CMat::identity(2, 2);
    for a in ops.iter().rev() {
        b = iw.transfer_map(a).apply(&b);
    }
    Ok(b.trace() * 0.5)
}

/// ω(S^a_0 S^b_r) for spin components a, b ∈ {1, 2, 3}.
pub fn correlation(a: usize, b: usize, r: usize) -> Result<f64> {
    if r == 0 {
        return domain("correlation distance must be at least 1");
    }
    if !(1..=3).contains(&a) || !(1..=3).contains(&b) {
        return domain("spin index must be 1, 2 or 3");
    }
    let s = spin_matrices(3);
    let mut ops = vec![s[a - 1].clone()];
    ops.extend(std::iter::repeat_n(CMat::identity(3, 3), r - 1));
    ops.push(s[b - 1].clone());
    Ok(fcs_expectation(&ops)?.re)
}

/// 4×4 boundary matrix ½ [E₁^ℓ(|β⟩⟨β'|)]_{αα'} whose spectrum is the
/// nonzero spectrum of the interval density ρ_{[1,ℓ]}.
pub fn reduced_density(len: usize) -> Result<CMat> {
    if len == 0 {
        return domain("interval length must be at least 1");
    }
    let e = transfer_map(&CMat::identity(3, 3)).matrix;
    let mut p = CMat::identity(4, 4);
    for _ in 0..len {
        p = &e * p;
    }
    let mut g = CMat::zeros(4, 4);
    for beta in 0..2 {
        for beta2 in 0..2 {
            let mut b = CMat::zeros(2, 2);
            b[(beta, beta2)] = ONE;
            let img = unvec2(&(&p * vec2(&b)));
            for alpha in 0..2 {
                for alpha2 in 0..2 {
                    g[(beta * 2 + alpha, beta2 * 2 + alpha2)] = img[(alpha, alpha2)] * 0.5;
                }
            }
        }
    }
    Ok(g)
}

/// −Σ λ ln λ over the positive spectrum of a density matrix.
pub fn von_neumann_entropy(rho: &CMat) -> f64 {
    let (vals, _) = eigh(rho);
    -vals.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum::<f64>()
}

pub fn interval_entropy(len: usize) -> Result<f64> {
    Ok(von_neumann_entropy(&reduced_density(len)?))
}

pub fn correlation_csv(a: usize, b: usize, rs: &[usize]) -> Result<String> {
    let mut t = Table::new(&["r", "correlation"]);
    for &r in rs {
        t.row(vec![r.to_string(), fmt17(correlation(a, b, r)?)]);
    }
    Ok(t.to_csv())
}

pub fn entropy_csv(ls: &[usize]) -> Result<String> {
    let mut t = Table::new(&["length", "entropy", "log4_gap"]);
    for &l in ls {
        let s = interval_entropy(l)?;
        t.row(vec![l.to_string(), fmt17(s), fmt17(4f64.ln() - s)]);
    }
    Ok(t.to_csv())
}

#[derive(Clone, Debug, Serialize)]
pub struct Golden {
    pub transfer_spectrum: Vec<[f64; 2]>,
    /// Row-major real parts of the 9×9 bond projector.
    pub bond_projector: Vec<f64>,
    pub bond_eigenvalues: Vec<f64>,
}

/// E₁ spectrum and the bond projector as a JSON document.
pub fn golden_json() -> Result<String> {
    let spec = transfer_map(&CMat::identity(3, 3)).eigenvalues().iter().map(|z| [z.re, z.im]).collect();
    let p = aklt_bond_matrix();
    let bond_projector = (0..9).flat_map(|i| (0..9).map(move |j| (i, j))).map(|(i, j)| p[(i, j)].re).collect();
    let (bond_eigenvalues, _) = eigh(&p);
    Ok(serde_json::to_string_pretty(&Golden { transfer_spectrum: spec, bond_projector, bond_eigenvalues })?)
}

/// Largest chain handled by the exact solvers.
pub const MAX_CHAIN: usize = 12;

fn chain_model(bond: &CMat, d: usize, n: usize, periodic: bool, pairs: usize) -> Result<SpectralModel> {
    if n > MAX_CHAIN {
        return resource(format!("chain of {n} sites exceeds the exact-solver limit {MAX_CHAIN}"));
    }
    let phi = chain_with_bond(n, periodic, d, bond)?;
    let layout = Layout::uniform((0..n).collect(), d);
    let mode = if layout.dim() <= 729 { SolverMode::Dense } else { SolverMode::Sparse { pairs } };
    SpectralModel::assemble(&phi, &[], &layout, mode)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub periodic: bool,
    pub e0: f64,
    pub gap: f64,
    pub degeneracy: usize,
}

/// Ground energy, gap and ground degeneracy of Σ P^{(2)} on n sites.
pub fn aklt_gap(n: usize, periodic: bool) -> Result<GapReport> {
    if n < 2 || (periodic && n < 3) {
        return domain("chain too short");
    }
    let m = chain_model(&aklt_bond_matrix(), 3, n, periodic, if periodic { 4 } else { 6 })?;
    Ok(GapReport { n, periodic, e0: m.ground_energy(), gap: m.gap(), degeneracy: m.ground_degeneracy() })
}

/// Orthonormal columns spanning the ground cluster of an open chain.
pub fn chain_ground_space(bond: &CMat, d: usize, n: usize) -> Result<CMat> {
    Ok(chain_model(bond, d, n, false, 6)?.ground_vectors())
}

/// Density matrix of sites start..start+len in the equal mixture over the
/// open-chain ground space, by exact diagonalization.
pub fn ed_interval_density(n: usize, start: usize, len: usize) -> Result<CMat> {
    if len == 0 || start + len > n {
        return domain("interval outside the chain");
    }
    let g = chain_ground_space(&aklt_bond_matrix(), 3, n)?;
    let dm = 3usize.pow(len as u32);
    let dr = 3usize.pow((n - start - len) as u32);
    let dl = 3usize.pow(start as u32);
    let mut rho = CMat::zeros(dm, dm);
    for k in 0..g.ncols() {
        for l in 0..dl {
            let block = CMat::from_fn(dm, dr, |m, r| g[(l * dm * dr + m * dr + r, k)]);
            rho += &block * block.adjoint();
        }
    }
    Ok(rho / C64::new(g.ncols() as f64, 0.0))
}

/// (G_mid ⊗ 1) applied to each column; G_mid acts on `len` sites starting at `start`.
fn apply_block_projector(g: &CMat, d: usize, n: usize, start: usize, len: usize, x: &CMat) -> CMat {
    let dr = d.pow((n - start - len) as u32);
    let dm = d.pow(len as u32);
    let dl = d.pow(start as u32);
    let mut out = CMat::zeros(x.nrows(), x.ncols());
    let gad = g.adjoint();
    for c in 0..x.ncols() {
        for l in 0..dl {
            let block = CMat::from_fn(dm, dr, |m, r| x[(l * dm * dr + m * dr + r, c)]);
            let proj = g * (&gad * block);
            for m in 0..dm {
                for r in 0..dr {
                    out[(l * dm * dr + m * dr + r, c)] = proj[(m, r)];
                }
            }
        }
    }
    out
}

/// ‖G_{[a−ℓ,a+ℓ+1]}(G_{[1,a]} ⊗ G_{[a+1,L]}) − G_{[1,L]}‖ for an open chain
/// with the given bond (sites numbered 1..L).
pub fn factorization_residual_with(bond: &CMat, d: usize, l_chain: usize, a: usize, ell: usize) -> Result<f64> {
    if ell == 0 || a < ell + 1 || a + ell + 1 > l_chain {
        return domain("need 1 ≤ a−ℓ and a+ℓ+1 ≤ L");
    }
    let gl = chain_ground_space(bond, d, a)?;
    let gr = chain_ground_space(bond, d, l_chain - a)?;
    let gm = chain_ground_space(bond, d, 2 * ell + 2)?;
    let gf = chain_ground_space(bond, d, l_chain)?;
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for i in 0..gl.ncols() {
        for j in 0..gr.ncols() {
            cols.push(DVector::from_iterator(gf.nrows(), gl.column(i).kronecker(&gr.column(j)).iter().copied()));
        }
    }
    let q = CMat::from_columns(&cols);
    let mut all = cols.clone();
    all.extend(gf.column_iter().map(|c| c.into_owned()));
    let span = CMat::from_columns(&all);
    let (vals, basis) = eigh(&(span.adjoint() * &span));
    let u = basis.to_complex();
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-10 * vals[vals.len() - 1]).collect();
    let b = CMat::from_columns(
        &keep.iter().map(|&k| (&span * u.column(k)) * C64::new(1.0 / vals[k].sqrt(), 0.0)).collect::<Vec<_>>(),
    );
    let lr_b = &q * (q.adjoint() * &b);
    let xb = apply_block_projector(&gm, d, l_chain, a - ell - 1, 2 * ell + 2, &lr_b) - &gf * (gf.adjoint() * &b);
    let (sv, _) = eigh(&(xb.adjoint() * &xb));
    Ok(sv.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

pub fn factorization_residual(l_chain: usize, a: usize, ell: usize) -> Result<f64> {
    factorization_residual_with(&aklt_bond_matrix(), 3, l_chain, a, ell)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub chain: usize,
    pub cut: usize,
    pub margins: Vec<usize>,
    pub residuals: Vec<f64>,
    pub log_slope: f64,
    /// Prefactor c in residual ≈ c e^{log_slope ℓ}.
    pub prefactor: f64,
}

/// Residuals over several margins with a least-squares log-slope.
pub fn factorization_sweep(bond: &CMat, d: usize, l_chain: usize, a: usize, margins: &[usize]) -> Result<FactorizationReport> {
    let residuals: Vec<f64> = margins.iter().map(|&e| factorization_residual_with(bond, d, l_chain, a, e)).collect::<Result<_>>()?;
    let xs: Vec<f64> = margins.iter().map(|&m| m as f64).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    Ok(FactorizationReport {
        chain: l_chain,
        cut: a,
        margins: margins.to_vec(),
        residuals,
        log_slope: slope,
        prefactor: (my - slope * mx).exp(),
    })
}
