use super::field::Field;
use super::lanczos::{hermitian_abs_max, lowest_pairs, LanczosOptions};
use super::operator::{Layout, LocalOperator};
use super::sparse::{assemble_csr, Csr};
use crate::error::{domain, resource, LabError, Result};
use crate::linalg::{eigh, is_real, op_norm, Basis, CMat, RMat, C64, ZERO};
use crate::lrbounds::Interaction;
use nalgebra::DVector;

/// Largest dimension diagonalized densely in automatic mode.
pub const DENSE_CAP: usize = 4096;
/// Pairs retained on the sparse path unless more are requested.
pub const MIN_SPARSE_PAIRS: usize = 8;
/// Relative width of the degenerate ground cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    Auto,
    Dense,
    Sparse { pairs: usize },
}

#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Dense(LocalOperator),
    SparseReal(Csr<f64>),
    SparseComplex(Csr<C64>),
}

#[derive(Clone, Debug)]
pub enum Eigenvectors {
    /// Full unitary eigenbasis.
    Full(Basis),
    /// Lowest Krylov pairs as columns.
    Partial(CMat),
}

/// Assembled Hamiltonian with its spectral data.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    layout: Layout,
    hamiltonian: Hamiltonian,
    eigenvalues: Vec<f64>,
    vectors: Eigenvectors,
    ground_energy: f64,
    gap: f64,
    ground_degeneracy: usize,
    norm: f64,
}

fn add_embedded_real(acc: &mut RMat, op: &LocalOperator, region: &Layout) -> Result<()> {
    let pos = region.positions_of(op.support(), op.dims())?;
    let off = region.offsets(&pos);
    let rest = region.offsets(&region.complement_positions(&pos));
    let m = op.matrix();
    for b in 0..off.len() {
        for a in 0..off.len() {
            let v = m[(a, b)].re;
            if v != 0.0 {
                for &r in &rest {
                    acc[(r + off[a], r + off[b])] += v;
                }
            }
        }
    }
    Ok(())
}

fn add_embedded(acc: &mut CMat, op: &LocalOperator, region: &Layout) -> Result<()> {
    let pos = region.positions_of(op.support(), op.dims())?;
    let off = region.offsets(&pos);
    let rest = region.offsets(&region.complement_positions(&pos));
    let m = op.matrix();
    for b in 0..off.len() {
        for a in 0..off.len() {
            let v = m[(a, b)];
            if v != ZERO {
                for &r in &rest {
                    acc[(r + off[a], r + off[b])] += v;
                }
            }
        }
    }
    Ok(())
}

/// Σ of the terms embedded into the region as a dense operator.
pub fn dense_sum(terms: &[LocalOperator], region: &Layout) -> Result<LocalOperator> {
    let n = region.dim();
    if terms.iter().all(|t| is_real(t.matrix())) {
        let mut acc = RMat::zeros(n, n);
        for t in terms {
            add_embedded_real(&mut acc, t, region)?;
        }
        LocalOperator::from_layout(region.clone(), crate::linalg::to_complex(&acc))
    } else {
        let mut acc = CMat::zeros(n, n);
        for t in terms {
            add_embedded(&mut acc, t, region)?;
        }
        LocalOperator::from_layout(region.clone(), acc)
    }
}

fn ground_cluster(vals: &[f64], norm: f64) -> (usize, Option<f64>) {
    let tol = CLUSTER_TOL * norm.max(f64::MIN_POSITIVE);
    let e0 = vals[0];
    let deg = vals.iter().take_while(|&&v| v - e0 <= tol).count();
    (deg, vals.get(deg).map(|v| v - e0))
}

impl SpectralModel {
    /// H = Σ onsite + Σ Φ(X), embedded in `region`.
    pub fn assemble(phi: &Interaction, onsite: &[LocalOperator], region: &Layout, mode: SolverMode) -> Result<Self> {
        let mut terms: Vec<LocalOperator> = onsite.to_vec();
        terms.extend(phi.terms().cloned());
        SpectralModel::from_terms(&terms, region, mode)
    }

    pub fn from_terms(terms: &[LocalOperator], region: &Layout, mode: SolverMode) -> Result<Self> {
        for t in terms {
            if !t.is_self_adjoint() {
                return domain(format!("term on {:?} is not self-adjoint", t.support()));
            }
        }
        let dim = region.dim();
        let dense = match mode {
            SolverMode::Dense => true,
            SolverMode::Auto => dim <= DENSE_CAP,
            SolverMode::Sparse { .. } => false,
        };
        if dense {
            if dim > 2 * DENSE_CAP {
                return resource(format!("dense diagonalization of dimension {dim} exceeds the cap"));
            }
            let h = dense_sum(terms, region)?;
            return SpectralModel::from_dense(h);
        }
        let pairs = match mode {
            SolverMode::Sparse { pairs } => pairs.max(2),
            _ => MIN_SPARSE_PAIRS,
        };
        if terms.iter().all(|t| is_real(t.matrix())) {
            let csr = assemble_csr::<f64>(terms, region)?;
            SpectralModel::from_sparse(region.clone(), Hamiltonian::SparseReal(csr), pairs)
        } else {
            let csr = assemble_csr::<C64>(terms, region)?;
            SpectralModel::from_sparse(region.clone(), Hamiltonian::SparseComplex(csr), pairs)
        }
    }

    /// Diagonalize a dense self-adjoint operator.
    pub fn from_dense(h: LocalOperator) -> Result<Self> {
        let (vals, basis) = eigh(h.matrix());
        let norm = vals.first().map(|v| v.abs()).unwrap_or(0.0).max(vals.last().map(|v| v.abs()).unwrap_or(0.0));
        let (deg, gap) = ground_cluster(&vals, norm);
        Ok(SpectralModel {
            layout: h.layout().clone(),
            ground_energy: vals[0],
            gap: gap.unwrap_or(0.0),
            ground_degeneracy: deg,
            norm,
            eigenvalues: vals,
            vectors: Eigenvectors::Full(basis),
            hamiltonian: Hamiltonian::Dense(h),
        })
    }

    fn from_sparse(layout: Layout, h: Hamiltonian, pairs: usize) -> Result<Self> {
        let dim = layout.dim();
        let norm = {
            let apply = |x: &[C64], y: &mut [C64]| match &h {
                Hamiltonian::SparseReal(c) => {
                    for i in 0..c.dim {
                        let mut acc = ZERO;
                        for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                            acc += x[c.cols[k] as usize] * c.vals[k];
                        }
                        y[i] = acc;
                    }
                }
                Hamiltonian::SparseComplex(c) => c.matvec(x, y),
                Hamiltonian::Dense(_) => unreachable!(),
            };
            hermitian_abs_max(&apply, dim, 1e-10)
        };
        let mut k = pairs.min(dim);
        loop {
            let opts = LanczosOptions::default();
            let (vals, vecs) = match &h {
                Hamiltonian::SparseReal(c) => {
                    let r = lowest_pairs::<f64>(&|x, y| c.matvec(x, y), dim, k, &opts)?;
                    check_residuals(&r.residuals, norm)?;
                    (r.values, to_columns(&r.vectors))
                }
                Hamiltonian::SparseComplex(c) => {
                    let r = lowest_pairs::<C64>(&|x, y| c.matvec(x, y), dim, k, &opts)?;
                    check_residuals(&r.residuals, norm)?;
                    (r.values, to_columns(&r.vectors))
                }
                Hamiltonian::Dense(_) => unreachable!(),
            };
            let (deg, gap) = ground_cluster(&vals, norm);
            if gap.is_none() && k < dim {
                k = (2 * k).min(dim);
                continue;
            }
            return Ok(SpectralModel {
                layout,
                ground_energy: vals[0],
                gap: gap.unwrap_or(0.0),
                ground_degeneracy: deg,
                norm,
                eigenvalues: vals,
                vectors: Eigenvectors::Partial(vecs),
                hamiltonian: h,
            });
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }
    pub fn gap(&self) -> f64 {
        self.gap
    }
    pub fn ground_degeneracy(&self) -> usize {
        self.ground_degeneracy
    }
    /// ‖H‖ (exact on the dense path, a converged Lanczos estimate otherwise).
    pub fn norm(&self) -> f64 {
        self.norm
    }
    pub fn is_dense(&self) -> bool {
        matches!(self.vectors, Eigenvectors::Full(_))
    }
    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }
    pub fn dense_hamiltonian(&self) -> Option<&LocalOperator> {
        match &self.hamiltonian {
            Hamiltonian::Dense(h) => Some(h),
            _ => None,
        }
    }

    pub fn basis(&self) -> Result<&Basis> {
        match &self.vectors {
            Eigenvectors::Full(b) => Ok(b),
            Eigenvectors::Partial(_) => Err(LabError::Unsupported(
                "operation needs the full eigenbasis; the model was solved on the sparse path".into(),
            )),
        }
    }

    /// Retained eigenvector j.
    pub fn eigenvector(&self, j: usize) -> DVector<C64> {
        match &self.vectors {
            Eigenvectors::Full(b) => b.column(j),
            Eigenvectors::Partial(v) => v.column(j).into_owned(),
        }
    }

    pub fn ground_state(&self) -> DVector<C64> {
        self.eigenvector(0)
    }

    /// Columns spanning the ground cluster.
    pub fn ground_vectors(&self) -> CMat {
        let cols: Vec<DVector<C64>> = (0..self.ground_degeneracy).map(|j| self.eigenvector(j)).collect();
        CMat::from_columns(&cols)
    }

    /// H v.
    pub fn apply_h(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.hamiltonian {
            Hamiltonian::Dense(h) => h.matrix() * v,
            Hamiltonian::SparseReal(c) => {
                let re: Vec<f64> = v.iter().map(|z| z.re).collect();
                let im: Vec<f64> = v.iter().map(|z| z.im).collect();
                let mut yr = vec![0.0; c.dim];
                let mut yi = vec![0.0; c.dim];
                c.matvec(&re, &mut yr);
                c.matvec(&im, &mut yi);
                DVector::from_fn(c.dim, |i, _| C64::new(yr[i], yi[i]))
            }
            Hamiltonian::SparseComplex(c) => {
                let mut y = vec![ZERO; c.dim];
                c.matvec(v.as_slice(), &mut y);
                DVector::from_vec(y)
            }
        }
    }

    /// Embed an operator into the model's region.
    pub fn embed(&self, a: &LocalOperator) -> Result<LocalOperator> {
        a.embed_layout(&self.layout)
    }

    /// U† A U for an operator supported in the region.
    pub fn to_eigenbasis(&self, a: &LocalOperator) -> Result<CMat> {
        let basis = self.basis()?;
        Ok(basis.to_eigen(self.embed(a)?.matrix()))
    }

    /// e^{itH} A e^{−itH}.
    pub fn heisenberg_evolve(&self, a: &LocalOperator, t: f64) -> Result<LocalOperator> {
        let basis = self.basis()?;
        let at = basis.to_eigen(self.embed(a)?.matrix());
        let ev = evolve_in_eigenbasis(&at, &self.eigenvalues, t);
        LocalOperator::from_layout(self.layout.clone(), basis.from_eigen(&ev))
    }

    /// ‖[τ_t(A), B]‖, evaluated in the eigenbasis where τ_t is diagonal.
    pub fn commutator_norm(&self, a: &LocalOperator, b: &LocalOperator, t: f64) -> Result<f64> {
        let prep = self.commutator_prep(a, b)?;
        Ok(prep.norm_at(t))
    }

    pub fn commutator_prep(&self, a: &LocalOperator, b: &LocalOperator) -> Result<CommutatorPrep<'_>> {
        let basis = self.basis()?;
        let at = basis.to_eigen(self.embed(a)?.matrix());
        let bt = basis.to_eigen(self.embed(b)?.matrix());
        Ok(CommutatorPrep { a: at, b: bt, energies: &self.eigenvalues })
    }

    /// Projection onto the ground cluster.
    pub fn ground_projector(&self) -> Result<LocalOperator> {
        if self.dim() > DENSE_CAP {
            return resource("dense ground projector requested above the dense cap".to_string());
        }
        let g = self.ground_vectors();
        let p = crate::linalg::cmul_da(&g, &g);
        LocalOperator::from_layout(self.layout.clone(), p)
    }

    /// Σ_j f(E_j) |v_j⟩⟨v_j| on the full eigenbasis.
    pub fn spectral_function(&self, f: impl Fn(f64) -> f64) -> Result<LocalOperator> {
        let basis = self.basis()?;
        let d = CMat::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&e| C64::new(f(e), 0.0)),
        ));
        LocalOperator::from_layout(self.layout.clone(), basis.from_eigen(&d))
    }

    /// Largest ‖Hv − λv‖ over the retained pairs.
    pub fn max_residual(&self) -> f64 {
        let k = match &self.vectors {
            Eigenvectors::Full(b) => b.ncols(),
            Eigenvectors::Partial(v) => v.ncols(),
        };
        (0..k)
            .map(|j| {
                let v = self.eigenvector(j);
                (self.apply_h(&v) - &v * C64::new(self.eigenvalues[j], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn check_residuals(res: &[f64], norm: f64) -> Result<()> {
    if res.iter().all(|&r| r <= 1e-8 * norm.max(f64::MIN_POSITIVE)) {
        Ok(())
    } else {
        resource("Lanczos residuals above 1e-8 ‖H‖".to_string())
    }
}

fn to_columns<T: Field>(vs: &[Vec<T>]) -> CMat {
    let cols: Vec<DVector<C64>> = vs.iter().map(|v| DVector::from_iterator(v.len(), v.iter().map(|x| x.to_c64()))).collect();
    CMat::from_columns(&cols)
}

/// Entry (i, j) multiplied by e^{i(E_i − E_j)t}.
pub fn evolve_in_eigenbasis(a: &CMat, energies: &[f64], t: f64) -> CMat {
    let ph: Vec<C64> = energies.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * ph[i] * ph[j].conj())
}

/// Cached eigenbasis images of A and B for repeated commutator norms.
pub struct CommutatorPrep<'a> {
    a: CMat,
    b: CMat,
    energies: &'a [f64],
}

impl CommutatorPrep<'_> {
    pub fn norm_at(&self, t: f64) -> f64 {
        let at = evolve_in_eigenbasis(&self.a, self.energies, t);
        op_norm(&crate::linalg::commutator(&at, &self.b))
    }
}

/// Gaussian time average √(α/π)∫ τ_t(O) e^{−αt²} dt under `generator`:
/// entry (i, j) in the generator's eigenbasis is multiplied by
/// e^{−(E_i − E_j)²/(4α)}. The result lives on the generator's region.
pub fn gaussian_smooth(o: &LocalOperator, alpha: f64, generator: &SpectralModel) -> Result<LocalOperator> {
    if !(alpha > 0.0) {
        return domain("smoothing parameter α must be positive");
    }
    let basis = generator.basis()?;
    let e = generator.eigenvalues();
    let ot = basis.to_eigen(generator.embed(o)?.matrix());
    let damped = CMat::from_fn(ot.nrows(), ot.ncols(), |i, j| {
        let de = e[i] - e[j];
        ot[(i, j)] * (-de * de / (4.0 * alpha)).exp()
    });
    LocalOperator::from_layout(generator.layout().clone(), basis.from_eigen(&damped))
}

#[cfg(test)]
mod tests {
    use super::super::operator::spin::*;
    use super::*;

    #[test]
    fn onsite_commuting_spectrum() {
        let terms = vec![LocalOperator::single(0, pauli_z()), LocalOperator::single(1, pauli_z())];
        let m = SpectralModel::from_terms(&terms, &Layout::uniform(vec![0, 1], 2), SolverMode::Auto).unwrap();
        let v = m.eigenvalues();
        assert!((v[0] + 2.0).abs() < 1e-14 && v[1].abs() < 1e-14 && v[2].abs() < 1e-14 && (v[3] - 2.0).abs() < 1e-14);
        assert_eq!(m.ground_degeneracy(), 1);
        assert!((m.gap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let mut terms = Vec::new();
        for i in 0..7 {
            terms.push(LocalOperator::pair(i, &pauli_z(), i + 1, &pauli_z()).unwrap().scaled(C64::new(-1.0, 0.0)));
        }
        for i in 0..8 {
            terms.push(LocalOperator::single(i, pauli_x() * C64::new(-0.7, 0.0)));
        }
        let layout = Layout::uniform((0..8).collect(), 2);
        let d = SpectralModel::from_terms(&terms, &layout, SolverMode::Dense).unwrap();
        let s = SpectralModel::from_terms(&terms, &layout, SolverMode::Sparse { pairs: 4 }).unwrap();
        for j in 0..4 {
            assert!((d.eigenvalues()[j] - s.eigenvalues()[j]).abs() < 1e-9);
        }
        assert!(s.max_residual() <= 1e-8 * s.norm());
        assert!((d.norm() - s.norm()).abs() < 1e-8 * d.norm());
    }
}
