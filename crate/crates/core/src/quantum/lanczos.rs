//! Lanczos with full reorthogonalization and explicit deflation.
//!
//! Each requested pair is found by a fresh Krylov run in the orthogonal
//! complement of the already locked vectors, so degenerate eigenvalues are
//! resolved one vector at a time.

use super::field::{axpy_sub, dot, norm, scale_in_place, Field};
use crate::error::{resource, Result};
use nalgebra::{DMatrix, DVector};
type CMat = DMatrix<Complex64>;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Relative residual target ‖Hv − θv‖ ≤ tol · ‖H‖.
    pub tol: f64,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-11, max_krylov: 160, max_restarts: 40, seed: 0x5eed }
    }
}

pub struct LanczosResult<T> {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<f64>,
    /// Largest |Ritz value| seen, a lower estimate of ‖H‖.
    pub norm_estimate: f64,
}

fn orthogonalize<T: Field>(w: &mut [T], against: &[Vec<T>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q, w);
            axpy_sub(c, q, w);
        }
    }
}

fn random_unit<T: Field>(dim: usize, rng: &mut ChaCha8Rng, locked: &[Vec<T>]) -> Vec<T> {
    loop {
        let mut v: Vec<T> = (0..dim)
            .map(|_| T::from_c64(Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)))
            .collect();
        orthogonalize(&mut v, locked);
        let n = norm(&v);
        if n > 1e-8 {
            scale_in_place(&mut v, 1.0 / n);
            return v;
        }
    }
}

fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    crate::linalg::eigh_real(&t)
}

/// Two steps of shifted inverse iteration on the tridiagonal matrix, which
/// restores full accuracy of the Ritz vector when off-diagonals are tiny.
fn refine_lowest(alpha: &[f64], beta: &[f64], theta: f64, mut s: Vec<f64>) -> (f64, Vec<f64>) {
    let m = alpha.len();
    if m == 1 {
        return (alpha[0], vec![1.0]);
    }
    let tmul = |v: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let mut acc = alpha[i] * v[i];
                if i > 0 {
                    acc += beta[i - 1] * v[i - 1];
                }
                if i + 1 < m {
                    acc += beta[i] * v[i + 1];
                }
                acc
            })
            .collect()
    };
    let width = alpha.iter().map(|a| a.abs()).chain(beta.iter().map(|b| 2.0 * b.abs())).fold(0.0, f64::max).max(1e-300);
    let shift = theta - 1e-10 * width;
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i] - shift;
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let lu = t.lu();
    for _ in 0..2 {
        match lu.solve(&nalgebra::DVector::from_vec(s.clone())) {
            Some(x) if x.iter().all(|v| v.is_finite()) => {
                let n = x.norm();
                s = x.iter().map(|v| v / n).collect();
            }
            _ => break,
        }
    }
    let ts = tmul(&s);
    let theta = s.iter().zip(&ts).map(|(a, b)| a * b).sum();
    (theta, s)
}

/// Lowest `k` eigenpairs of the Hermitian operator `apply` on C^dim (or R^dim).
pub fn lowest_pairs<T: Field>(
    apply: &dyn Fn(&[T], &mut [T]),
    dim: usize,
    k: usize,
    opts: &LanczosOptions,
) -> Result<LanczosResult<T>> {
    let k = k.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<T>> = Vec::new();
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    let mut scale = 0.0f64;
    let mut w = vec![T::zero(); dim];
    for _target in 0..k {
        let mut start = random_unit(dim, &mut rng, &locked);
        let mut done = false;
        for _restart in 0..opts.max_restarts {
            let room = dim - locked.len();
            let mmax = opts.max_krylov.min(room).max(1);
            let mut basis: Vec<Vec<T>> = vec![start.clone()];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let (theta, s) = loop {
                let m = basis.len() - 1;
                apply(&basis[m], &mut w);
                let a = dot(&basis[m], &w).re();
                alpha.push(a);
                axpy_sub(T::from_f64(a), &basis[m], &mut w);
                if m > 0 {
                    axpy_sub(T::from_f64(beta[m - 1]), &basis[m - 1], &mut w);
                }
                orthogonalize(&mut w, &basis);
                orthogonalize(&mut w, &locked);
                let b = norm(&w);
                let size = alpha.len();
                let check = size % 4 == 0 || size >= mmax || b < 1e-13 * scale.max(1e-300) || size == 1;
                if check {
                    let (vals, vecs) = tridiag_eigen(&alpha, &beta);
                    scale = scale.max(vals[0].abs()).max(vals[size - 1].abs());
                    let (theta, s) = refine_lowest(&alpha, &beta, vals[0], vecs.column(0).iter().copied().collect());
                    let est = b * s[size - 1].abs();
                    if est <= 0.1 * opts.tol * scale.max(1e-300) || size >= mmax || b < 1e-13 * scale.max(1e-300) {
                        break (theta, s);
                    }
                }
                beta.push(b);
                let mut q = w.clone();
                scale_in_place(&mut q, 1.0 / b);
                basis.push(q);
            };
            let mut y = vec![T::zero(); dim];
            for (q, &c) in basis.iter().zip(&s) {
                axpy_sub(T::from_f64(-c), q, &mut y);
            }
            orthogonalize(&mut y, &locked);
            let ny = norm(&y);
            scale_in_place(&mut y, 1.0 / ny);
            apply(&y, &mut w);
            axpy_sub(T::from_f64(theta), &y, &mut w);
            let res = norm(&w);
            if res <= opts.tol * scale.max(1e-300) || scale == 0.0 {
                values.push(theta);
                residuals.push(res);
                locked.push(y);
                done = true;
                break;
            }
            start = y;
        }
        if !done {
            return resource("Lanczos did not converge within the restart budget");
        }
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(LanczosResult {
        values: idx.iter().map(|&i| values[i]).collect(),
        vectors: idx.iter().map(|&i| locked[i].clone()).collect(),
        residuals: idx.iter().map(|&i| residuals[i]).collect(),
        norm_estimate: scale,
    })
}

/// max |λ| of a Hermitian operator, from the extreme Ritz values of a
/// single Lanczos run continued until both ends stabilise.
pub fn hermitian_abs_max(apply: &dyn Fn(&[Complex64], &mut [Complex64]), dim: usize, tol: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xab5);
    let start: Vec<Complex64> = random_unit(dim, &mut rng, &[]);
    let mut basis = vec![start];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut last = f64::NAN;
    loop {
        let m = basis.len() - 1;
        apply(&basis[m], &mut w);
        let a = dot(&basis[m], &w).re;
        alpha.push(a);
        axpy_sub(Complex64::new(a, 0.0), &basis[m], &mut w);
        if m > 0 {
            axpy_sub(Complex64::new(beta[m - 1], 0.0), &basis[m - 1], &mut w);
        }
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        let size = alpha.len();
        if size % 4 != 0 && size < dim && b > 1e-14 {
            beta.push(b);
            let mut q = w.clone();
            scale_in_place(&mut q, 1.0 / b);
            basis.push(q);
            continue;
        }
        let (vals, vecs) = tridiag_eigen(&alpha, &beta);
        let (lo, hi) = (vals[0], vals[size - 1]);
        let (val, col) = if hi.abs() >= lo.abs() { (hi.abs(), size - 1) } else { (lo.abs(), 0) };
        let est = b * vecs[(size - 1, col)].abs();
        let converged = (est <= tol * val && (val - last).abs() <= tol * val) || b <= 1e-14 * val.max(1e-300);
        if converged || size >= dim || size >= 400 {
            return val;
        }
        last = val;
        beta.push(b);
        let mut q = w.clone();
        scale_in_place(&mut q, 1.0 / b);
        basis.push(q);
    }
}

/// max |λ| for a batch of independent Hermitian operators, one per column.
///
/// `apply` maps a block whose column j belongs to problem j to the block of
/// images; each column runs its own fully reorthogonalized Lanczos recursion,
/// so the expensive products are shared across the batch.
pub fn batched_abs_max(apply: &dyn Fn(&CMat) -> CMat, dim: usize, batch: usize, tol: f64, max_iter: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xba7c);
    let mut current = CMat::zeros(dim, batch);
    for j in 0..batch {
        let v: Vec<Complex64> = random_unit(dim, &mut rng, &[]);
        current.set_column(j, &DVector::from_vec(v));
    }
    let mut basis: Vec<CMat> = vec![current];
    let mut alpha: Vec<Vec<f64>> = vec![Vec::new(); batch];
    let mut beta: Vec<Vec<f64>> = vec![Vec::new(); batch];
    let mut last = vec![f64::NAN; batch];
    let mut result = vec![0.0f64; batch];
    let mut done = vec![false; batch];
    let cap = max_iter.min(dim).max(1);
    for step in 0..cap {
        let w_all = apply(&basis[step]);
        let mut next = CMat::zeros(dim, batch);
        for j in 0..batch {
            if done[j] {
                continue;
            }
            let mut w: Vec<Complex64> = w_all.column(j).iter().copied().collect();
            let q: Vec<Complex64> = basis[step].column(j).iter().copied().collect();
            let a = dot(&q, &w).re;
            alpha[j].push(a);
            axpy_sub(Complex64::new(a, 0.0), &q, &mut w);
            if step > 0 {
                let prev: Vec<Complex64> = basis[step - 1].column(j).iter().copied().collect();
                axpy_sub(Complex64::new(beta[j][step - 1], 0.0), &prev, &mut w);
            }
            for _ in 0..2 {
                for b in &basis {
                    let col: Vec<Complex64> = b.column(j).iter().copied().collect();
                    let c = dot(&col, &w);
                    axpy_sub(c, &col, &mut w);
                }
            }
            let nb = norm(&w);
            let size = step + 1;
            let (vals, vecs) = tridiag_eigen(&alpha[j], &beta[j]);
            let (lo, hi) = (vals[0], vals[size - 1]);
            let (val, col) = if hi.abs() >= lo.abs() { (hi.abs(), size - 1) } else { (lo.abs(), 0) };
            result[j] = val;
            let est = nb * vecs[(size - 1, col)].abs();
            let small = nb <= 1e-14 * val.max(1e-300) || val == 0.0 && nb <= 1e-300;
            if small || (size % 4 == 0 && est <= tol * val && (val - last[j]).abs() <= tol * val) {
                done[j] = true;
                continue;
            }
            if size % 4 == 0 {
                last[j] = val;
            }
            beta[j].push(nb);
            scale_in_place(&mut w, 1.0 / nb);
            next.set_column(j, &DVector::from_vec(w));
        }
        if done.iter().all(|&d| d) {
            break;
        }
        basis.push(next);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_lowest_with_degeneracy() {
        // Ring Laplacian: eigenvalues 2 − 2 cos(2πk/n), doubly degenerate for k ≠ 0.
        let n = 40;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 2.0 * x[i] - x[(i + 1) % n] - x[(i + n - 1) % n];
            }
        };
        let r = lowest_pairs::<f64>(&apply, n, 5, &LanczosOptions::default()).unwrap();
        let mut want: Vec<f64> = (0..n).map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        want.sort_by(f64::total_cmp);
        for i in 0..5 {
            assert!((r.values[i] - want[i]).abs() < 1e-9, "{} vs {}", r.values[i], want[i]);
        }
    }

    #[test]
    fn batched_matches_single() {
        let n = 60;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let apply = |x: &CMat| {
            CMat::from_fn(n, 3, |i, j| {
                let off = if i + 1 < n { x[(i + 1, j)] } else { Complex64::new(0.0, 0.0) };
                let bk = if i > 0 { x[(i - 1, j)] } else { Complex64::new(0.0, 0.0) };
                x[(i, j)] * d[i] * (j as f64) + off + bk
            })
        };
        let r = batched_abs_max(&apply, n, 3, 1e-12, 200);
        for j in 0..3 {
            let m = DMatrix::<f64>::from_fn(n, n, |a, b| {
                if a == b {
                    d[a] * j as f64
                } else if a.abs_diff(b) == 1 {
                    1.0
                } else {
                    0.0
                }
            });
            let e = m.symmetric_eigenvalues();
            let want = e.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            assert!((r[j] - want).abs() < 1e-9 * want, "{} vs {}", r[j], want);
        }
        let zero = batched_abs_max(&|x: &CMat| x * Complex64::new(0.0, 0.0), 10, 2, 1e-12, 50);
        assert_eq!(zero, vec![0.0, 0.0]);
    }

    #[test]
    fn abs_max_of_diagonal() {
        let d: Vec<f64> = (0..50).map(|i| i as f64 - 30.5).collect();
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..50 {
                y[i] = x[i] * d[i];
            }
        };
        let v = hermitian_abs_max(&apply, 50, 1e-12);
        assert!((v - 30.5).abs() < 1e-9);
    }
}
