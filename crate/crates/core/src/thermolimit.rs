//! Convergence of finite-volume dynamics: nested spin volumes, harmonic
//! kernels on growing tori, and Dyson-series truncation.

use crate::error::{domain, resource, Result};
use crate::harmonic::{apply_tt, apply_tt_infinite, HarmonicSpec, SiteFunction};
use crate::lattice::{convolution_constant_exact, DecayFunction, SiteSet};
use crate::linalg::{cmul, from_parts, imag_part, is_real, op_norm, real_part, CMat, RMat, C64, I};
use crate::lrbounds::{interaction_norm, Interaction, EPS_NUM};
use crate::quadrature::gauss_legendre_on;
use crate::quantum::lanczos::batched_abs_max;
use crate::models::tfim;
use crate::quantum::{Layout, LocalOperator, SolverMode, SpectralModel};
use crate::report::{fmt17, Table};
use serde::Serialize;
use std::collections::BTreeSet;

/// Nested volumes Λ₁ ⊂ Λ₂ ⊂ … inside one host region, all sharing the
/// host interaction Φ and on-site terms H_x.
#[derive(Clone, Debug)]
pub struct VolumeSequence {
    host: SiteSet,
    phi: Interaction,
    onsite: Vec<LocalOperator>,
    volumes: Vec<Vec<usize>>,
    decay: DecayFunction,
}

impl VolumeSequence {
    pub fn new(
        host: SiteSet,
        phi: Interaction,
        onsite: Vec<LocalOperator>,
        mut volumes: Vec<Vec<usize>>,
        decay: DecayFunction,
    ) -> Result<Self> {
        if volumes.is_empty() {
            return domain("volume sequence is empty");
        }
        for v in volumes.iter_mut() {
            v.sort_unstable();
            v.dedup();
            if v.iter().any(|&s| s >= host.len()) {
                return domain("volume contains a site outside the host region");
            }
        }
        for w in volumes.windows(2) {
            let small: BTreeSet<usize> = w[0].iter().copied().collect();
            let large: BTreeSet<usize> = w[1].iter().copied().collect();
            if !small.is_subset(&large) || small.len() == large.len() {
                return domain("volumes must be strictly nested");
            }
        }
        if onsite.iter().any(|h| h.support().len() != 1) {
            return domain("on-site terms must be supported on a single site");
        }
        Ok(VolumeSequence { host, phi, onsite, volumes, decay })
    }

    /// Centered chains of the given sizes inside a host chain of the largest
    /// size, with Φ the bonds −Jσ³σ³ and on-site fields −hσ¹.
    pub fn centered_chain(sizes: &[usize], j: f64, h: f64) -> Result<Self> {
        let max = match sizes.iter().max() {
            Some(&m) => m,
            None => return domain("no volume sizes given"),
        };
        if sizes.iter().any(|&n| n == 0 || n % 2 != max % 2) {
            return domain("sizes must be positive and share parity to be centered");
        }
        let (phi, onsite) = tfim(max, j, h, false)?;
        let onsite = if h != 0.0 { onsite } else { Vec::new() };
        let center = max / 2;
        let volumes = sizes.iter().map(|&n| (center - n / 2..center - n / 2 + n).collect()).collect();
        VolumeSequence::new(SiteSet::path(max), phi, onsite, volumes, DecayFunction::power(1))
    }

    pub fn volumes(&self) -> &[Vec<usize>] {
        &self.volumes
    }

    pub fn center(&self) -> usize {
        self.host.len() / 2
    }

    fn model(&self, k: usize) -> Result<SpectralModel> {
        let vol = &self.volumes[k];
        let phi = self.phi.restrict(vol);
        let onsite: Vec<LocalOperator> =
            self.onsite.iter().filter(|h| vol.contains(&h.support()[0])).cloned().collect();
        let layout = Layout::new(vol.clone(), vec![2; vol.len()])?;
        SpectralModel::assemble(&phi, &onsite, &layout, SolverMode::Dense)
    }
}

/// Uniform grid on [0, t_max] refined by doubling until the sup changes by
/// less than `tol` or `max_refinements` doublings were made.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
    pub max_refinements: usize,
    pub tol: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, points: usize) -> Self {
        TimeGrid { t_max, points, max_refinements: 2, tol: 1e-9 }
    }

    fn initial(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n).map(|i| self.t_max * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub t_at_max: f64,
    pub tail_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub grid_points: usize,
    pub converged_grid: bool,
    pub strictly_decreasing: bool,
}

impl ConvergenceTable {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["n", "m", "delta", "tail_bound", "pass"]);
        for r in &self.rows {
            t.row(vec![r.n.to_string(), r.m.to_string(), fmt17(r.delta), fmt17(r.tail_bound), r.pass.to_string()]);
        }
        t.to_csv()
    }
}

enum Dense {
    Real(RMat),
    Complex(CMat),
}

impl Dense {
    fn from(m: &CMat) -> Self {
        if is_real(m) {
            Dense::Real(real_part(m))
        } else {
            Dense::Complex(m.clone())
        }
    }

    fn mul(&self, x: &CMat) -> CMat {
        match self {
            Dense::Real(r) => from_parts(&(r * real_part(x)), &(r * imag_part(x))),
            Dense::Complex(c) => cmul(c, x),
        }
    }
}

/// sup over `times` of ‖τ_t^{Λm}(A) − τ_t^{Λn}(A) ⊗ 1‖, computed in the
/// eigenbasis of H_{Λm} by batched Lanczos.
fn difference_norms(small: &SpectralModel, large: &SpectralModel, a: &LocalOperator, times: &[f64]) -> Result<Vec<f64>> {
    let lay_m = large.layout().clone();
    let dim = lay_m.dim();
    let a_m = Dense::from(&large.to_eigenbasis(a)?);
    let a_n = small.to_eigenbasis(a)?;
    let a_n_emb = Dense::from(LocalOperator::from_layout(small.layout().clone(), a_n)?.embed_layout(&lay_m)?.matrix());
    let un = small.basis()?.to_complex();
    let un_emb = LocalOperator::from_layout(small.layout().clone(), un)?.embed_layout(&lay_m)?;
    let q = large.basis()?.apply_adjoint_block(un_emb.matrix());
    let qt = Dense::from(&q.adjoint());
    let q = Dense::from(&q);
    let en_diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        small.dim(),
        small.eigenvalues().iter().map(|&e| C64::new(e, 0.0)),
    ));
    let en_emb = LocalOperator::from_layout(small.layout().clone(), en_diag)?.embed_layout(&lay_m)?;
    let en: Vec<f64> = (0..dim).map(|i| en_emb.matrix()[(i, i)].re).collect();
    let em = large.eigenvalues().to_vec();
    let b = times.len();
    let phase_m = CMat::from_fn(dim, b, |i, j| C64::from_polar(1.0, em[i] * times[j]));
    let phase_n = CMat::from_fn(dim, b, |i, j| C64::from_polar(1.0, en[i] * times[j]));
    let apply = |x: &CMat| {
        let y = x.zip_map(&phase_m, |v, p| v * p.conj());
        let first = a_m.mul(&y).zip_map(&phase_m, |v, p| v * p);
        let z = qt.mul(x).zip_map(&phase_n, |v, p| v * p.conj());
        let z = a_n_emb.mul(&z).zip_map(&phase_n, |v, p| v * p);
        first - q.mul(&z)
    };
    Ok(batched_abs_max(&apply, dim, b, 1e-10, 300))
}

/// 2‖A‖‖Φ‖ [(e^{kt} − 1)/k − t] Σ_{y∈Λm∖Λn} Σ_{x∈X} F(d(x,y)), k = 2‖Φ‖C.
pub fn tail_bound(norm_a: f64, phi_norm: f64, c: f64, t: f64, weight: f64) -> f64 {
    let k = 2.0 * phi_norm * c;
    let t = t.abs();
    let integral = if k * t < 1e-6 { k * t * t / 2.0 } else { (k * t).exp_m1() / k - t };
    2.0 * norm_a * phi_norm * integral * weight
}

/// Sup-norm differences of τ_t(A) between consecutive volumes.
pub fn volume_convergence(seq: &VolumeSequence, a: &LocalOperator, grid: &TimeGrid) -> Result<ConvergenceTable> {
    if a.support().iter().any(|s| !seq.volumes[0].contains(s)) {
        return domain("observable must be supported in the smallest volume");
    }
    let max_dim = 1usize << seq.volumes.last().unwrap().len();
    if max_dim > crate::quantum::DENSE_CAP {
        return resource(format!("largest volume has dimension {max_dim}, above the dense cap"));
    }
    let phi_norm = interaction_norm(&seq.phi, &seq.decay, &seq.host)?;
    let c = convolution_constant_exact(&seq.host, &seq.decay)?;
    let norm_a = a.norm();
    let models: Vec<SpectralModel> = (0..seq.volumes.len()).map(|k| seq.model(k)).collect::<Result<_>>()?;
    let mut times = grid.initial();
    let mut sup: Vec<(f64, f64)> = vec![(0.0, 0.0); models.len().saturating_sub(1)];
    let mut converged = false;
    let mut refinements = 0;
    let mut fresh = times.clone();
    loop {
        let mut change = 0.0f64;
        for k in 0..sup.len() {
            let vals = difference_norms(&models[k], &models[k + 1], a, &fresh)?;
            for (&t, &v) in fresh.iter().zip(&vals) {
                if v > sup[k].0 {
                    change = change.max(v - sup[k].0);
                    sup[k] = (v, t);
                }
            }
        }
        if refinements > 0 && change < grid.tol {
            converged = true;
            break;
        }
        if refinements >= grid.max_refinements {
            break;
        }
        fresh = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        times.extend(fresh.iter().copied());
        times.sort_by(f64::total_cmp);
        refinements += 1;
    }
    let mut rows = Vec::new();
    for k in 0..sup.len() {
        let small: BTreeSet<usize> = seq.volumes[k].iter().copied().collect();
        let mut weight = 0.0;
        for &y in seq.volumes[k + 1].iter().filter(|y| !small.contains(y)) {
            for &x in a.support() {
                weight += seq.decay.at(seq.host.distance(x, y));
            }
        }
        let tail = tail_bound(norm_a, phi_norm, c, grid.t_max, weight);
        let (delta, t_at) = sup[k];
        rows.push(ConvergenceRow {
            n: seq.volumes[k].len(),
            m: seq.volumes[k + 1].len(),
            delta,
            t_at_max: t_at,
            tail_bound: tail,
            pass: delta <= tail + EPS_NUM,
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].delta < w[0].delta);
    Ok(ConvergenceTable { rows, grid_points: times.len(), converged_grid: converged, strictly_decreasing })
}

/// Torus results deviating from infinite volume by more than this near the
/// origin are flagged as wrapped.
pub const WRAP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicConvergenceRow {
    pub l: i64,
    pub difference: f64,
    /// Lemma-based estimate of what wraps around the torus into |x| ≤ L/2.
    pub wrap_estimate: f64,
    pub wraparound: bool,
}

/// ‖T_t^{L} f − T_t^{∞} f‖ₗ₂ over |x| ≤ L/2 for each L.
pub fn harmonic_volume_convergence(
    d: usize,
    omega: f64,
    lambda: &[f64],
    f: &SiteFunction,
    t: f64,
    ls: &[i64],
    tol: f64,
) -> Result<Vec<HarmonicConvergenceRow>> {
    let inf = HarmonicSpec::infinite(d, omega, lambda.to_vec())?;
    let tf_inf = apply_tt_infinite(&inf, f, t, tol)?;
    let mut rows = Vec::new();
    for &l in ls {
        let spec = HarmonicSpec::finite(d, l, omega, lambda.to_vec())?;
        let tf = apply_tt(&spec, f, t)?;
        let mut sq = 0.0;
        for i in 0..spec.volume().unwrap() {
            let x = spec.site_coords(i);
            if x.iter().map(|c| c.abs()).sum::<i64>() * 2 <= l {
                sq += (tf.get(&x) - tf_inf.get(&x)).norm_sqr();
            }
        }
        let wrap = wrap_estimate(&inf, f, t, l);
        let difference = sq.sqrt();
        rows.push(HarmonicConvergenceRow { l, difference, wrap_estimate: wrap, wraparound: difference > WRAP_TOL });
    }
    Ok(rows)
}

/// ‖f‖₁ min_μ (1 + c e^{μ/2} + c⁻¹) e^{−μ(3L/2 − v_h(μ)|t|)} over a μ grid.
fn wrap_estimate(spec: &HarmonicSpec, f: &SiteFunction, t: f64, l: i64) -> f64 {
    let reach = 1.5 * l as f64;
    (1..=80)
        .map(|k| 0.05 * k as f64)
        .map(|mu| spec.harmonic_constant(mu) * (-mu * (reach - spec.v_h(mu) * t.abs())).exp())
        .fold(f64::INFINITY, f64::min)
        .min(2.0)
        * f.l1()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DysonOrder {
    pub n: usize,
    pub term_norm: f64,
    pub remainder: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DysonReport {
    pub t: f64,
    pub v_norm: f64,
    pub nodes: usize,
    pub orders: Vec<DysonOrder>,
}

impl DysonReport {
    pub fn pass(&self) -> bool {
        self.orders.iter().all(|o| o.pass)
    }
}

/// Largest Gauss–Legendre node count tried for the time-ordered integrals.
pub const DYSON_NODE_CAP: usize = 256;

/// Partial sums of the Dyson series for τ_t^{H0+V}(A) with order-n term
/// i^n ∫_{0≤s_n≤…≤s_1≤t} [τ_{s_n}(V), […[τ_{s_1}(V), τ_t(A)]]], compared to
/// the exact evolution under H0 + V.
pub fn dyson_truncation(h0: &SpectralModel, v: &LocalOperator, a: &LocalOperator, t: f64, n_max: usize) -> Result<DysonReport> {
    let layout = h0.layout().clone();
    let h0_op = match h0.dense_hamiltonian() {
        Some(h) => h.clone(),
        None => return domain("Dyson truncation needs a dense base Hamiltonian"),
    };
    let v_emb = v.embed_layout(&layout)?;
    let full = SpectralModel::from_dense(h0_op.with_matrix(h0_op.matrix() + v_emb.matrix())?)?;
    let exact = full.heisenberg_evolve(a, t)?.into_matrix();
    let x0 = h0.heisenberg_evolve(a, t)?.into_matrix();
    let mut nodes = 12 + 4 * n_max;
    let mut terms = dyson_terms(h0, &v_emb, &x0, t, n_max, nodes)?;
    loop {
        let next_nodes = 2 * nodes;
        if next_nodes > DYSON_NODE_CAP {
            return resource(format!("time-ordered quadrature did not stabilise within {DYSON_NODE_CAP} nodes"));
        }
        let finer = dyson_terms(h0, &v_emb, &x0, t, n_max, next_nodes)?;
        let change = terms.iter().zip(&finer).map(|(a, b)| op_norm(&(a - b))).fold(0.0, f64::max);
        terms = finer;
        nodes = next_nodes;
        if change <= 1e-13 {
            break;
        }
    }
    let vn = v.norm();
    let an = a.norm();
    let mut partial = CMat::zeros(exact.nrows(), exact.ncols());
    let mut orders = Vec::new();
    let mut fact = 1.0;
    for (n, term) in terms.iter().enumerate() {
        partial += term;
        fact *= (n + 1) as f64;
        let remainder = op_norm(&(&exact - &partial));
        let x = 2.0 * vn * t.abs();
        let bound = x.powi(n as i32 + 1) / fact * an * x.exp();
        orders.push(DysonOrder { n, term_norm: op_norm(term), remainder, bound, pass: remainder <= bound + EPS_NUM * 1e-4 });
    }
    Ok(DysonReport { t, v_norm: vn, nodes, orders })
}

/// Order-0..=n_max terms by Gauss–Legendre collocation of the recursion
/// G_k(s) = i ∫_s^t [τ_u(V), G_{k−1}(u)] du, G_0 = τ_t(A), term_k = G_k(0).
fn dyson_terms(h0: &SpectralModel, v: &LocalOperator, x0: &CMat, t: f64, n_max: usize, m: usize) -> Result<Vec<CMat>> {
    let (u, w) = gauss_legendre_on(m, 0.0, t);
    let vt: Vec<CMat> = u.iter().map(|&s| h0.heisenberg_evolve(v, s).map(|o| o.into_matrix())).collect::<Result<_>>()?;
    // s_mat[i][j] = ∫_{u_i}^t ℓ_j
    let lag = |j: usize, x: f64| -> f64 {
        let mut p = 1.0;
        for k in 0..m {
            if k != j {
                p *= (x - u[k]) / (u[j] - u[k]);
            }
        }
        p
    };
    let mut s_mat = vec![vec![0.0; m]; m];
    for i in 0..m {
        let (qx, qw) = gauss_legendre_on(m, u[i], t);
        for (j, row) in s_mat[i].iter_mut().enumerate() {
            *row = qx.iter().zip(&qw).map(|(&x, &ww)| ww * lag(j, x)).sum();
        }
    }
    let mut out = vec![x0.clone()];
    let mut g: Vec<CMat> = vec![x0.clone(); m];
    for _ in 1..=n_max {
        let comm: Vec<CMat> = (0..m).map(|j| cmul(&vt[j], &g[j]) - cmul(&g[j], &vt[j])).collect();
        let mut term = CMat::zeros(x0.nrows(), x0.ncols());
        for j in 0..m {
            term += &comm[j] * C64::new(w[j], 0.0);
        }
        out.push(term * I);
        let mut next = Vec::with_capacity(m);
        for row in &s_mat {
            let mut acc = CMat::zeros(x0.nrows(), x0.ncols());
            for j in 0..m {
                acc += &comm[j] * C64::new(row[j], 0.0);
            }
            next.push(acc * I);
        }
        g = next;
    }
    Ok(out)
}
