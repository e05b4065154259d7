//! Quadrature rules: Gauss–Legendre, adaptive Gauss–Kronrod (7/15) and
//! Gauss–Hermite.

use crate::error::{resource, Result};
use crate::linalg::eigh_real;
use nalgebra::DMatrix;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    (x.iter().map(|xi| m + h * xi).collect(), w.iter().map(|wi| h * wi).collect())
}

/// Nodes and weights of the n-point Gauss–Hermite rule for weight e^{−x²}
/// (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let (vals, vecs) = eigh_real(&j);
    let mu0 = std::f64::consts::PI.sqrt();
    let w = (0..n).map(|k| mu0 * vecs[(0, k)] * vecs[(0, k)]).collect();
    (vals, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel; returns (estimate, error estimate).
fn gk15<const M: usize>(f: &mut impl FnMut(f64) -> [f64; M], a: f64, b: f64) -> ([f64; M], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; M];
    let mut g = [0.0; M];
    for m in 0..M {
        k[m] = WGK[7] * fc[m];
        g[m] = WG[3] * fc[m];
    }
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for m in 0..M {
            k[m] += WGK[j] * (f1[m] + f2[m]);
            if j % 2 == 1 {
                g[m] += WG[j / 2] * (f1[m] + f2[m]);
            }
        }
    }
    let mut err = 0.0f64;
    for m in 0..M {
        k[m] *= h;
        g[m] *= h;
        err = err.max((k[m] - g[m]).abs());
    }
    (k, err)
}

/// Adaptive Gauss–Kronrod integration of a vector-valued integrand on [a, b]
/// to absolute tolerance `tol`, with a cap on integrand evaluations.
pub fn adaptive_gk<const M: usize>(
    f: impl FnMut(f64) -> [f64; M],
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<[f64; M]> {
    adaptive_gk_split(f, a, b, 1, tol, max_evals)
}

/// As [`adaptive_gk`], starting from `pieces` equal panels.
pub fn adaptive_gk_split<const M: usize>(
    mut f: impl FnMut(f64) -> [f64; M],
    a: f64,
    b: f64,
    pieces: usize,
    tol: f64,
    max_evals: usize,
) -> Result<[f64; M]> {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut evals = 15 * pieces;
    let mut panels = Vec::with_capacity(2 * pieces);
    for i in 0..pieces {
        let pa = a + h * i as f64;
        let pb = if i + 1 == pieces { b } else { a + h * (i + 1) as f64 };
        let (est, err) = gk15(&mut f, pa, pb);
        panels.push((pa, pb, est, err));
    }
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        if evals + 30 > max_evals {
            return resource(format!(
                "adaptive quadrature did not reach tolerance {tol:e} within {max_evals} evaluations (error {total_err:e})"
            ));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (e1, r1) = gk15(&mut f, pa, mid);
        let (e2, r2) = gk15(&mut f, mid, pb);
        evals += 30;
        panels.push((pa, mid, e1, r1));
        panels.push((mid, pb, e2, r2));
    }
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = [0.0; M];
    for p in &panels {
        for m in 0..M {
            out[m] += p.2[m];
        }
    }
    Ok(out)
}
