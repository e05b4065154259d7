use crate::error::{domain, Result};
use crate::linalg::{hermitian_defect, op_norm, CMat, C64, ONE, ZERO};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Tolerance for certifying self-adjointness, relative to ‖M‖.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;

/// Tensor layout of an ordered list of sites with local dimensions; the
/// first site is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub sites: Vec<usize>,
    pub dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Layout {
    pub fn new(sites: Vec<usize>, dims: Vec<usize>) -> Result<Self> {
        if sites.len() != dims.len() {
            return domain("sites and dims have different lengths");
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return domain("sites must be strictly increasing");
        }
        if dims.contains(&0) {
            return domain("local dimensions must be positive");
        }
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Layout { sites, dims, strides })
    }

    pub fn uniform(sites: Vec<usize>, d: usize) -> Self {
        let n = sites.len();
        Layout::new(sites, vec![d; n]).expect("valid uniform layout")
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, site: usize) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    pub fn dim_of(&self, site: usize) -> Option<usize> {
        self.position(site).map(|p| self.dims[p])
    }

    /// Flat offsets of every configuration of the listed positions, in
    /// lexicographic order of those positions.
    pub fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize];
        for &p in positions {
            let mut next = Vec::with_capacity(out.len() * self.dims[p]);
            for &o in &out {
                for v in 0..self.dims[p] {
                    next.push(o + v * self.strides[p]);
                }
            }
            out = next;
        }
        out
    }

    /// Positions of `sub` inside this layout, checking containment and dims.
    pub fn positions_of(&self, sub: &[usize], dims: &[usize]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(sub.len());
        for (s, &d) in sub.iter().zip(dims) {
            match self.position(*s) {
                Some(p) if self.dims[p] == d => pos.push(p),
                Some(_) => return domain(format!("local dimension mismatch at site {s}")),
                None => return domain(format!("site {s} is not contained in the region")),
            }
        }
        Ok(pos)
    }

    pub fn complement_positions(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.sites.len()).filter(|p| !positions.contains(p)).collect()
    }

    pub fn sub_layout(&self, sites: &[usize]) -> Result<Layout> {
        let dims = sites
            .iter()
            .map(|s| self.dim_of(*s).ok_or_else(|| crate::error::LabError::Domain(format!("site {s} not in layout"))))
            .collect::<Result<Vec<_>>>()?;
        Layout::new(sites.to_vec(), dims)
    }
}

/// A complex matrix acting on the tensor product of the sites in `support`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    layout: Layout,
    matrix: CMat,
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    support: Vec<usize>,
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl LocalOperator {
    pub fn new(support: Vec<usize>, dims: Vec<usize>, matrix: CMat) -> Result<Self> {
        let layout = Layout::new(support, dims)?;
        let n = layout.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return domain(format!(
                "matrix is {}×{} but the local dimensions multiply to {n}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        Ok(LocalOperator { layout, matrix })
    }

    pub fn from_layout(layout: Layout, matrix: CMat) -> Result<Self> {
        LocalOperator::new(layout.sites, layout.dims, matrix)
    }

    pub fn single(site: usize, matrix: CMat) -> Self {
        let d = matrix.nrows();
        LocalOperator::new(vec![site], vec![d], matrix).expect("square single-site matrix")
    }

    /// A ⊗ B on two distinct sites (placed in increasing site order).
    pub fn pair(x: usize, a: &CMat, y: usize, b: &CMat) -> Result<Self> {
        if x == y {
            return domain("pair operator needs two distinct sites");
        }
        if x < y {
            LocalOperator::new(vec![x, y], vec![a.nrows(), b.nrows()], a.kronecker(b))
        } else {
            LocalOperator::new(vec![y, x], vec![b.nrows(), a.nrows()], b.kronecker(a))
        }
    }

    pub fn identity(support: Vec<usize>, dims: Vec<usize>) -> Result<Self> {
        let n = dims.iter().product();
        LocalOperator::new(support, dims, CMat::identity(n, n))
    }

    pub fn support(&self) -> &[usize] {
        &self.layout.sites
    }
    pub fn dims(&self) -> &[usize] {
        &self.layout.dims
    }
    pub fn layout(&self) -> &Layout {
        &self.layout
    }
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix)
    }

    pub fn is_self_adjoint(&self) -> bool {
        hermitian_defect(&self.matrix) <= SELF_ADJOINT_TOL
    }

    pub fn adjoint(&self) -> Self {
        LocalOperator { layout: self.layout.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scaled(&self, c: C64) -> Self {
        LocalOperator { layout: self.layout.clone(), matrix: &self.matrix * c }
    }

    pub fn with_matrix(&self, matrix: CMat) -> Result<Self> {
        LocalOperator::from_layout(self.layout.clone(), matrix)
    }

    /// A ⊗ 1 on the region described by `sites`/`dims`.
    pub fn embed(&self, sites: &[usize], dims: &[usize]) -> Result<Self> {
        let region = Layout::new(sites.to_vec(), dims.to_vec())?;
        self.embed_layout(&region)
    }

    pub fn embed_layout(&self, region: &Layout) -> Result<Self> {
        let pos = region.positions_of(&self.layout.sites, &self.layout.dims)?;
        let n = region.dim();
        let off = region.offsets(&pos);
        let rest = region.offsets(&region.complement_positions(&pos));
        let mut m = CMat::zeros(n, n);
        let k = self.dim();
        for b in 0..k {
            for a in 0..k {
                let v = self.matrix[(a, b)];
                if v == ZERO {
                    continue;
                }
                for &r in &rest {
                    m[(r + off[a], r + off[b])] = v;
                }
            }
        }
        Ok(LocalOperator { layout: region.clone(), matrix: m })
    }

    /// Normalized partial trace onto `sites` ⊆ support: Tr over the
    /// complement divided by its dimension.
    pub fn partial_trace(&self, sites: &[usize]) -> Result<Self> {
        let dims: Vec<usize> = sites
            .iter()
            .map(|s| self.layout.dim_of(*s).ok_or_else(|| crate::error::LabError::Domain(format!("site {s} outside support"))))
            .collect::<Result<_>>()?;
        let keep = self.layout.positions_of(sites, &dims)?;
        let off = self.layout.offsets(&keep);
        let rest = self.layout.offsets(&self.layout.complement_positions(&keep));
        let k = off.len();
        let mut m = CMat::zeros(k, k);
        let norm = 1.0 / rest.len() as f64;
        for b in 0..k {
            for a in 0..k {
                let mut acc = ZERO;
                for &r in &rest {
                    acc += self.matrix[(r + off[a], r + off[b])];
                }
                m[(a, b)] = acc * norm;
            }
        }
        LocalOperator::new(sites.to_vec(), dims, m)
    }

    /// Apply this operator to a state vector on the region `region`.
    pub fn apply(&self, region: &Layout, psi: &DVector<C64>) -> Result<DVector<C64>> {
        let pos = region.positions_of(&self.layout.sites, &self.layout.dims)?;
        let off = region.offsets(&pos);
        let rest = region.offsets(&region.complement_positions(&pos));
        let k = off.len();
        let mut out = DVector::zeros(psi.len());
        let mut buf = vec![ZERO; k];
        for &r in &rest {
            for a in 0..k {
                buf[a] = psi[r + off[a]];
            }
            for a in 0..k {
                let mut acc = ZERO;
                for b in 0..k {
                    acc += self.matrix[(a, b)] * buf[b];
                }
                out[r + off[a]] = acc;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.dim();
        let re = (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)].im).collect()).collect();
        let j = OperatorJson { support: self.layout.sites.clone(), dims: self.layout.dims.clone(), re, im };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: OperatorJson = serde_json::from_str(s)?;
        let n = j.re.len();
        if j.im.len() != n || j.re.iter().chain(&j.im).any(|r| r.len() != n) {
            return domain("operator dump has ragged or mismatched re/im arrays");
        }
        let m = CMat::from_fn(n, n, |a, b| C64::new(j.re[a][b], j.im[a][b]));
        LocalOperator::new(j.support, j.dims, m)
    }
}

/// Spin operators and Pauli matrices.
pub mod spin {
    use super::*;

    pub fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }
    pub fn pauli_y() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, -crate::linalg::I, crate::linalg::I, ZERO])
    }
    pub fn pauli_z() -> CMat {
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// (S¹, S², S³) for spin s = (d − 1)/2 in the basis m = s, s−1, …, −s.
    pub fn spin_matrices(d: usize) -> [CMat; 3] {
        let s = (d as f64 - 1.0) / 2.0;
        let m = |k: usize| s - k as f64;
        let mut sp = CMat::zeros(d, d);
        for k in 1..d {
            // ⟨m+1| S⁺ |m⟩ with |m⟩ = index k, |m+1⟩ = index k−1.
            let mk = m(k);
            sp[(k - 1, k)] = C64::new((s * (s + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
        }
        let sm = sp.adjoint();
        let sx = (&sp + &sm) * C64::new(0.5, 0.0);
        let sy = (&sp - &sm) * C64::new(0.0, -0.5);
        let sz = CMat::from_diagonal(&DVector::from_fn(d, |k, _| C64::new(m(k), 0.0)));
        [sx, sy, sz]
    }

    /// S_x · S_y on two sites of local dimension d.
    pub fn heisenberg_bond(d: usize) -> CMat {
        let s = spin_matrices(d);
        let mut out = CMat::zeros(d * d, d * d);
        for a in &s {
            out += a.kronecker(a);
        }
        out
    }
}
