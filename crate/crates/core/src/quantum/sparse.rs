use super::field::Field;
use super::operator::{Layout, LocalOperator};
use crate::error::Result;
use crate::linalg::C64;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct Csr<T> {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<T>,
}

impl<T: Field> Csr<T> {
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.dim {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc;
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

struct TermPlan<T> {
    positions: Vec<usize>,
    local_strides: Vec<usize>,
    off: Vec<usize>,
    /// Per local row a: nonzero (b, value) pairs.
    rows: Vec<Vec<(usize, T)>>,
}

/// Σ of the given terms embedded in `region`, built row by row.
pub fn assemble_csr<T: Field>(terms: &[LocalOperator], region: &Layout) -> Result<Csr<T>> {
    let dim = region.dim();
    let mut plans = Vec::with_capacity(terms.len());
    for t in terms {
        let positions = region.positions_of(t.support(), t.dims())?;
        let off = region.offsets(&positions);
        let k = t.dim();
        let mut local_strides = vec![1; positions.len()];
        for q in (0..positions.len().saturating_sub(1)).rev() {
            local_strides[q] = local_strides[q + 1] * t.dims()[q + 1];
        }
        let m = t.matrix();
        let rows = (0..k)
            .map(|a| {
                (0..k)
                    .filter(|&b| m[(a, b)] != C64::new(0.0, 0.0))
                    .map(|b| (b, T::from_c64(m[(a, b)])))
                    .collect()
            })
            .collect();
        plans.push(TermPlan { positions, local_strides, off, rows });
    }
    let mut digit_strides = vec![1usize; region.dims.len()];
    for q in (0..region.dims.len().saturating_sub(1)).rev() {
        digit_strides[q] = digit_strides[q + 1] * region.dims[q + 1];
    }
    let mut row_ptr = Vec::with_capacity(dim + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut entries: Vec<(usize, T)> = Vec::new();
    for i in 0..dim {
        entries.clear();
        for p in &plans {
            let mut a = 0;
            for (q, &pos) in p.positions.iter().enumerate() {
                let digit = (i / digit_strides[pos]) % region.dims[pos];
                a += digit * p.local_strides[q];
            }
            let base = i - p.off[a];
            for &(b, v) in &p.rows[a] {
                entries.push((base + p.off[b], v));
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < entries.len() {
            let j = entries[k].0;
            let mut acc = T::zero();
            while k < entries.len() && entries[k].0 == j {
                acc += entries[k].1;
                k += 1;
            }
            if acc.abs2() > 0.0 {
                cols.push(j as u32);
                vals.push(acc);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(Csr { dim, row_ptr, cols, vals })
}

#[cfg(test)]
mod tests {
    use super::super::operator::spin::*;
    use super::*;

    #[test]
    fn csr_matches_dense_embedding() {
        let region = Layout::uniform(vec![0, 1, 2], 2);
        let terms = vec![
            LocalOperator::pair(0, &pauli_x(), 2, &pauli_y()).unwrap(),
            LocalOperator::single(1, pauli_z()),
            LocalOperator::pair(1, &pauli_z(), 2, &pauli_z()).unwrap(),
        ];
        let csr = assemble_csr::<C64>(&terms, &region).unwrap();
        let mut dense = crate::linalg::CMat::zeros(8, 8);
        for t in &terms {
            dense += t.embed_layout(&region).unwrap().matrix();
        }
        for j in 0..8 {
            let mut e = vec![C64::new(0.0, 0.0); 8];
            e[j] = C64::new(1.0, 0.0);
            let mut y = vec![C64::new(0.0, 0.0); 8];
            csr.matvec(&e, &mut y);
            for i in 0..8 {
                assert!((y[i] - dense[(i, j)]).norm() < 1e-15);
            }
        }
    }
}
