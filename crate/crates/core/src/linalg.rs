//! Dense linear algebra helpers shared by every module.
//!
//! Complex products go through `matrixmultiply::zgemm`; the real symmetric
//! fast path keeps eigenbases real whenever the input has no imaginary part.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dimension at and below which operator norms use a full SVD.
pub const SVD_CAP: usize = 512;

/// C = A B for column-major complex matrices.
pub fn cmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "cmul: inner dimension mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex64 is repr(C) with layout [f64; 2]; strides describe
    // nalgebra's dense column-major storage and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// A† B.
pub fn cmul_ad(a: &CMat, b: &CMat) -> CMat {
    cmul(&a.adjoint(), b)
}

/// A B†.
pub fn cmul_da(a: &CMat, b: &CMat) -> CMat {
    cmul(a, &b.adjoint())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    cmul(a, b) - cmul(b, a)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn from_parts(re: &RMat, im: &RMat) -> CMat {
    re.zip_map(im, C64::new)
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest singular value.
///
/// Full SVD up to [`SVD_CAP`]; above it a Lanczos iteration on the Hermitian
/// part (or on C†C otherwise).
pub fn op_norm(m: &CMat) -> f64 {
    let n = m.nrows().max(m.ncols());
    if n == 0 {
        return 0.0;
    }
    if n <= SVD_CAP {
        return svd_norm(m);
    }
    let herm = m.nrows() == m.ncols() && hermitian_defect_abs(m) <= 1e-14 * max_abs(m).max(1e-300);
    if herm {
        let apply = |x: &[C64], y: &mut [C64]| {
            let v = DVector::from_column_slice(x);
            let w = m * v;
            y.copy_from_slice(w.as_slice());
        };
        crate::quantum::lanczos::hermitian_abs_max(&apply, m.nrows(), 1e-13)
    } else {
        let mad = m.adjoint();
        let apply = |x: &[C64], y: &mut [C64]| {
            let v = DVector::from_column_slice(x);
            let w = &mad * (m * v);
            y.copy_from_slice(w.as_slice());
        };
        crate::quantum::lanczos::hermitian_abs_max(&apply, m.ncols(), 1e-13).sqrt()
    }
}

pub fn svd_norm(m: &CMat) -> f64 {
    if is_real(m) {
        let r = real_part(m);
        r.singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
    } else {
        m.singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
    }
}

pub fn rop_norm(m: &RMat) -> f64 {
    if m.nrows() <= SVD_CAP {
        m.singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
    } else {
        op_norm(&to_complex(m))
    }
}

fn hermitian_defect_abs(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut d = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// ‖M − M†‖ / ‖M‖ (zero for the zero matrix).
pub fn hermitian_defect(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let scale = op_norm(m);
    if scale == 0.0 {
        return 0.0;
    }
    let diff = m - m.adjoint();
    op_norm(&diff) / scale
}

/// Eigenvectors of a Hermitian matrix, kept real when possible.
#[derive(Clone, Debug)]
pub enum Basis {
    Real(RMat),
    Complex(CMat),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Real(u) => u.nrows(),
            Basis::Complex(u) => u.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Basis::Real(u) => u.ncols(),
            Basis::Complex(u) => u.ncols(),
        }
    }

    pub fn column(&self, j: usize) -> DVector<C64> {
        match self {
            Basis::Real(u) => u.column(j).map(|x| C64::new(x, 0.0)),
            Basis::Complex(u) => u.column(j).into_owned(),
        }
    }

    pub fn to_complex(&self) -> CMat {
        match self {
            Basis::Real(u) => to_complex(u),
            Basis::Complex(u) => u.clone(),
        }
    }

    /// U† O U.
    pub fn to_eigen(&self, o: &CMat) -> CMat {
        match self {
            Basis::Real(u) => {
                let ut = u.transpose();
                let re = &ut * real_part(o) * u;
                if is_real(o) {
                    to_complex(&re)
                } else {
                    let im = &ut * imag_part(o) * u;
                    from_parts(&re, &im)
                }
            }
            Basis::Complex(u) => cmul(&cmul_ad(u, o), u),
        }
    }

    /// U O U†.
    pub fn from_eigen(&self, o: &CMat) -> CMat {
        match self {
            Basis::Real(u) => {
                let ut = u.transpose();
                let re = u * real_part(o) * &ut;
                if is_real(o) {
                    to_complex(&re)
                } else {
                    let im = u * imag_part(o) * &ut;
                    from_parts(&re, &im)
                }
            }
            Basis::Complex(u) => cmul_da(&cmul(u, o), u),
        }
    }

    /// U† v.
    pub fn apply_adjoint(&self, v: &DVector<C64>) -> DVector<C64> {
        match self {
            Basis::Real(u) => {
                let re = u.tr_mul(&v.map(|z| z.re));
                let im = u.tr_mul(&v.map(|z| z.im));
                re.zip_map(&im, C64::new)
            }
            Basis::Complex(u) => u.ad_mul(v),
        }
    }

    /// U v.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        match self {
            Basis::Real(u) => {
                let re = u * v.map(|z| z.re);
                let im = u * v.map(|z| z.im);
                re.zip_map(&im, C64::new)
            }
            Basis::Complex(u) => u * v,
        }
    }

    /// U† X for a block of column vectors.
    pub fn apply_adjoint_block(&self, x: &CMat) -> CMat {
        match self {
            Basis::Real(u) => {
                let ut = u.transpose();
                from_parts(&(&ut * real_part(x)), &(&ut * imag_part(x)))
            }
            Basis::Complex(u) => cmul_ad(u, x),
        }
    }

    /// U X for a block of column vectors.
    pub fn apply_block(&self, x: &CMat) -> CMat {
        match self {
            Basis::Real(u) => from_parts(&(u * real_part(x)), &(u * imag_part(x))),
            Basis::Complex(u) => cmul(u, x),
        }
    }
}

/// Ascending eigen-decomposition of a Hermitian matrix.
pub fn eigh(m: &CMat) -> (Vec<f64>, Basis) {
    if is_real(m) {
        let (vals, vecs) = eigh_real(&real_part(m));
        (vals, Basis::Real(vecs))
    } else {
        let se = SymmetricEigen::new(m.clone());
        let (vals, vecs) = sort_pairs(se.eigenvalues.as_slice(), &se.eigenvectors);
        (vals, Basis::Complex(vecs))
    }
}

pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let se = SymmetricEigen::new(m.clone());
    sort_pairs(se.eigenvalues.as_slice(), &se.eigenvectors)
}

fn sort_pairs<T: nalgebra::Scalar + Copy>(vals: &[f64], vecs: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
    let cols: Vec<_> = idx.iter().map(|&i| vecs.column(i)).collect();
    let out = DMatrix::from_columns(&cols);
    (sorted, out)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm<T>(a: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.modulus()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = T::from_real(2f64.powi(-s));
    let a = a * scale;
    let id = DMatrix::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| T::from_real(B[k]);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Pairwise summation for reproducible reductions.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmul_matches_nalgebra() {
        let a = CMat::from_fn(5, 3, |i, j| C64::new(i as f64 - j as f64, (i * j) as f64 * 0.5));
        let b = CMat::from_fn(3, 4, |i, j| C64::new((i + 2 * j) as f64, -(i as f64)));
        let c = cmul(&a, &b);
        assert!(frobenius(&(c - &a * &b)) < 1e-12);
        assert!(frobenius(&(cmul_ad(&b, &b) - b.adjoint() * &b)) < 1e-12);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7f64;
        let a = RMat::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        let want = RMat::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((e - want).norm() < 1e-14);
    }

    #[test]
    fn expm_large_norm_scales() {
        let a = CMat::from_row_slice(2, 2, &[ZERO, C64::new(0.0, 30.0), C64::new(0.0, 30.0), ZERO]);
        let e = expm(&a);
        let want = CMat::from_row_slice(
            2,
            2,
            &[C64::new(30f64.cos(), 0.0), C64::new(0.0, 30f64.sin()), C64::new(0.0, 30f64.sin()), C64::new(30f64.cos(), 0.0)],
        );
        assert!(frobenius(&(e - want)) < 1e-12);
    }

    #[test]
    fn eigh_sorted_and_real_path() {
        let m = CMat::from_row_slice(2, 2, &[ONE * 2.0, ONE, ONE, ONE * 2.0]);
        let (vals, basis) = eigh(&m);
        assert!(matches!(basis, Basis::Real(_)));
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let d = basis.to_eigen(&m);
        assert!((d[(0, 0)].re - 1.0).abs() < 1e-13 && d[(0, 1)].norm() < 1e-13);
    }

    #[test]
    fn op_norm_large_matches_svd() {
        let n = 600;
        let m = CMat::from_fn(n, n, |i, j| C64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + j) % 5) as f64 * 0.1));
        let want = m.singular_values().max();
        let got = op_norm(&m);
        assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
    }
}
