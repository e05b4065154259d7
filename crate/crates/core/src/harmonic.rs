//! Harmonic lattice dynamics on Weyl operators.
//!
//! Finite volume is the torus Λ_L = (−L, L]^d, infinite volume is Z^d. A
//! Weyl operator W(f) = exp[i Σ_x (Re f(x) q_x + Im f(x) p_x)] evolves as
//! τ_t(W(f)) = W(T_t f) with T_t a real-linear convolution map.

use crate::error::{domain, resource, LabError, Result};
use crate::lattice::DecayFunction;
use crate::linalg::{expm, rop_norm, RMat, C64};
use crate::quadrature::adaptive_gk_split;
use crate::report::{fmt17, Table};
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

/// Default absolute tolerance for infinite-volume quadrature.
pub const INFINITE_TOL: f64 = 1e-9;
/// Integrand evaluation budget for one infinite-volume kernel value.
pub const QUADRATURE_BUDGET: usize = 10_000_000;
/// Largest volume for the dense phase-space oracle.
pub const ORACLE_CAP: usize = 4096;
/// Default ε for the corollary constants.
pub const DEFAULT_EPS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    d: usize,
    #[serde(rename = "L")]
    l: Option<i64>,
    omega: f64,
    lambda: Vec<f64>,
}

impl HarmonicSpec {
    pub fn new(d: usize, l: Option<i64>, omega: f64, lambda: Vec<f64>) -> Result<Self> {
        let s = HarmonicSpec { d, l, omega, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn finite(d: usize, l: i64, omega: f64, lambda: Vec<f64>) -> Result<Self> {
        Self::new(d, Some(l), omega, lambda)
    }

    pub fn infinite(d: usize, omega: f64, lambda: Vec<f64>) -> Result<Self> {
        Self::new(d, None, omega, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return domain("dimension must be positive");
        }
        if self.lambda.len() != self.d {
            return domain(format!("need {} couplings, got {}", self.d, self.lambda.len()));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return domain("ω must be positive; the massless case is not supported");
        }
        if self.lambda.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return domain("couplings λ_j must be finite and nonnegative");
        }
        if let Some(l) = self.l {
            if l < 1 {
                return domain("torus half-width L must be at least 1");
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn half_width(&self) -> Option<i64> {
        self.l
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
    pub fn is_finite(&self) -> bool {
        self.l.is_some()
    }

    /// c_{ω,λ} = (ω² + 4Σλ_j)^{1/2}.
    pub fn c(&self) -> f64 {
        (self.omega * self.omega + 4.0 * self.lambda.iter().sum::<f64>()).sqrt()
    }

    /// v_h(μ) = c max(2/μ, e^{μ/2+1}).
    pub fn v_h(&self, mu: f64) -> f64 {
        self.c() * (2.0 / mu).max((mu / 2.0 + 1.0).exp())
    }

    /// 1 + c e^{μ/2} + c⁻¹.
    pub fn harmonic_constant(&self, mu: f64) -> f64 {
        let c = self.c();
        1.0 + c * (mu / 2.0).exp() + 1.0 / c
    }

    /// C(ε, μ) = (1 + c e^{(μ+ε)/2} + c⁻¹) sup_s e^{−εs}(1+s)^{d+1}.
    pub fn corollary_constant(&self, mu: f64, eps: f64) -> f64 {
        self.harmonic_constant(mu + eps) * poly_exp_sup(eps, self.d)
    }

    /// (μ+ε) v_h(μ+ε).
    pub fn corollary_rate(&self, mu: f64, eps: f64) -> f64 {
        (mu + eps) * self.v_h(mu + eps)
    }

    /// The μ in `grid` minimizing v_h, with that velocity.
    pub fn optimal_mu(&self, grid: &[f64]) -> Option<(f64, f64)> {
        grid.iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| (m, self.v_h(m)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// |Λ_L| = (2L)^d.
    pub fn volume(&self) -> Option<usize> {
        self.l.map(|l| (2 * l as usize).pow(self.d as u32))
    }

    fn side(&self) -> Result<usize> {
        match self.l {
            Some(l) => Ok(2 * l as usize),
            None => Err(LabError::Unsupported("operation needs a finite volume".into())),
        }
    }

    /// Coordinates in (−L, L]^d of the site with flat index i.
    pub fn site_coords(&self, i: usize) -> Vec<i64> {
        let l = self.l.expect("finite volume");
        let n = 2 * l as usize;
        let mut out = vec![0; self.d];
        let mut r = i;
        for q in (0..self.d).rev() {
            let u = (r % n) as i64;
            out[q] = if u <= l { u } else { u - n as i64 };
            r /= n;
        }
        out
    }

    /// Flat index of a site given in (−L, L]^d.
    pub fn site_index(&self, x: &[i64]) -> Result<usize> {
        let n = self.side()?;
        let l = n as i64 / 2;
        if x.len() != self.d {
            return domain("site has the wrong dimension");
        }
        let mut i = 0;
        for &c in x {
            if c <= -l || c > l {
                return domain(format!("coordinate {c} outside (−{l}, {l}]"));
            }
            i = i * n + c.rem_euclid(n as i64) as usize;
        }
        Ok(i)
    }

    /// Torus distance in finite volume, ℓ¹ distance on Z^d otherwise.
    pub fn distance(&self, x: &[i64], y: &[i64]) -> u64 {
        match self.l {
            Some(l) => {
                let n = 2 * l;
                x.iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let r = (a - b).rem_euclid(n);
                        r.min(n - r) as u64
                    })
                    .sum()
            }
            None => x.iter().zip(y).map(|(a, b)| (a - b).unsigned_abs()).sum(),
        }
    }

    /// Λ_L* = {xπ/L : x ∈ Λ_L}, in flat site order.
    pub fn dual_points(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.volume().ok_or_else(|| LabError::Unsupported("no dual lattice in infinite volume".into()))?;
        let l = self.l.unwrap() as f64;
        Ok((0..n).map(|i| self.site_coords(i).iter().map(|&x| x as f64 * PI / l).collect()).collect())
    }

    fn digits(&self, i: usize, n: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        let mut r = i;
        for q in (0..self.d).rev() {
            out[q] = r % n;
            r /= n;
        }
        out
    }

    pub fn to_dense(&self, f: &SiteFunction) -> Result<Vec<C64>> {
        let n = self.volume().ok_or_else(|| LabError::Unsupported("dense functions need a finite volume".into()))?;
        let mut v = vec![C64::new(0.0, 0.0); n];
        for (x, &z) in f.iter() {
            v[self.site_index(x)?] += z;
        }
        Ok(v)
    }

    pub fn from_dense(&self, v: &[C64]) -> SiteFunction {
        let mut f = SiteFunction::new();
        for (i, &z) in v.iter().enumerate() {
            f.set(self.site_coords(i), z);
        }
        f
    }
}

/// sup_{s≥0} e^{−εs}(1+s)^{d+1}.
pub fn poly_exp_sup(eps: f64, d: usize) -> f64 {
    let p = (d + 1) as f64;
    let s = p / eps - 1.0;
    if s <= 0.0 {
        1.0
    } else {
        (-eps * s).exp() * (1.0 + s).powf(p)
    }
}

/// γ(k) = (ω² + 4Σ_j λ_j sin²(k_j/2))^{1/2}.
pub fn dispersion(spec: &HarmonicSpec, k: &[f64]) -> f64 {
    let s: f64 = spec.lambda.iter().zip(k).map(|(l, kj)| l * (kj / 2.0).sin().powi(2)).sum();
    (spec.omega * spec.omega + 4.0 * s).sqrt()
}

/// A finitely supported complex function on the lattice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiteFunction {
    values: BTreeMap<Vec<i64>, C64>,
}

impl SiteFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delta(x: Vec<i64>) -> Self {
        Self::from_pairs(vec![(x, C64::new(1.0, 0.0))])
    }

    pub fn from_pairs(pairs: Vec<(Vec<i64>, C64)>) -> Self {
        let mut f = Self::new();
        for (x, z) in pairs {
            *f.values.entry(x).or_insert(C64::new(0.0, 0.0)) += z;
        }
        f
    }

    pub fn set(&mut self, x: Vec<i64>, z: C64) {
        self.values.insert(x, z);
    }

    pub fn get(&self, x: &[i64]) -> C64 {
        self.values.get(x).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &C64)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.values.values().map(|z| z.norm()).sum()
    }

    pub fn l2(&self) -> f64 {
        self.values.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        SiteFunction { values: self.values.iter().map(|(x, z)| (x.clone(), z * a)).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, z) in other.iter() {
            *out.values.entry(x.clone()).or_insert(C64::new(0.0, 0.0)) += z;
        }
        out
    }

    /// ⟨f, g⟩ = Σ conj(f(x)) g(x).
    pub fn inner(&self, other: &Self) -> C64 {
        self.values.iter().map(|(x, z)| z.conj() * other.get(x)).sum()
    }

    /// Largest |f(x) − g(x)| over both supports.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for (x, z) in self.iter() {
            m = m.max((z - other.get(x)).norm());
        }
        for (x, z) in other.iter() {
            m = m.max((z - self.get(x)).norm());
        }
        m
    }
}

/// h_t^{(−1)}, h_t^{(0)}, h_t^{(1)} at one time, indexed by flat site.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTriple {
    pub t: f64,
    pub h_minus1: Vec<f64>,
    pub h_0: Vec<f64>,
    pub h_plus1: Vec<f64>,
}

/// The three finite-volume Fourier sums at time t.
pub fn kernels_finite(spec: &HarmonicSpec, t: f64) -> Result<KernelTriple> {
    let n = spec.side()?;
    let vol = spec.volume().unwrap();
    // e^{iπm/L} for m mod 2L
    let roots: Vec<C64> = (0..n).map(|m| C64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64)).collect();
    let digits: Vec<Vec<usize>> = (0..vol).map(|i| spec.digits(i, n)).collect();
    let ks = spec.dual_points()?;
    let weights: Vec<(f64, C64)> = ks
        .iter()
        .map(|k| {
            let g = dispersion(spec, k);
            (g, C64::from_polar(1.0, -2.0 * g * t))
        })
        .collect();
    let mut h_minus1 = vec![0.0; vol];
    let mut h_0 = vec![0.0; vol];
    let mut h_plus1 = vec![0.0; vol];
    for x in 0..vol {
        let (mut sm, mut s0, mut sp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (kk, &(g, e)) in weights.iter().enumerate() {
            let mut m = 0;
            for q in 0..spec.d {
                m += digits[kk][q] * digits[x][q];
            }
            let z = roots[m % n] * e;
            sm += z / g;
            s0 += z;
            sp += z * g;
        }
        let inv = 1.0 / vol as f64;
        h_minus1[x] = sm.im * inv;
        h_0[x] = s0.re * inv;
        h_plus1[x] = sp.im * inv;
    }
    Ok(KernelTriple { t, h_minus1, h_0, h_plus1 })
}

/// Infinite-volume kernels H_t^{(−1)}, H_t^{(0)}, H_t^{(1)} at x by nested
/// adaptive Gauss–Kronrod over [−π, π]^d to absolute tolerance `tol`.
pub fn kernels_infinite(d: usize, omega: f64, lambda: &[f64], t: f64, x: &[i64], tol: f64) -> Result<[f64; 3]> {
    if !(tol > 0.0) {
        return domain("quadrature tolerance must be positive");
    }
    if x.len() != d || lambda.len() != d {
        return domain("site or couplings have the wrong dimension");
    }
    let spec = HarmonicSpec::infinite(d, omega, lambda.to_vec())?;
    let evals = Cell::new(0usize);
    let vol = (2.0 * PI).powi(d as i32);
    let mut ks = vec![0.0; d];
    let raw = nested_level(&spec, t, x, &mut ks, 0, tol * vol, &evals)?;
    Ok([raw[0] / vol, raw[1] / vol, raw[2] / vol])
}

fn nested_level(
    spec: &HarmonicSpec,
    t: f64,
    x: &[i64],
    ks: &mut Vec<f64>,
    level: usize,
    tol: f64,
    evals: &Cell<usize>,
) -> Result<[f64; 3]> {
    let d = spec.d;
    let pieces = 2 + x[level].unsigned_abs() as usize / 2 + (spec.c() * t.abs()) as usize;
    let remaining = QUADRATURE_BUDGET.saturating_sub(evals.get());
    if level + 1 == d {
        let r = adaptive_gk_split(
            |k| {
                evals.set(evals.get() + 1);
                ks[level] = k;
                let g = dispersion(spec, ks);
                let phase: f64 = ks.iter().zip(x).map(|(k, &xi)| k * xi as f64).sum::<f64>() - 2.0 * g * t;
                let (s, c) = phase.sin_cos();
                [s / g, c, g * s]
            },
            -PI,
            PI,
            pieces,
            tol,
            remaining,
        );
        return r.map_err(|e| match e {
            LabError::Resource(m) => LabError::Resource(format!("kernel quadrature budget exhausted: {m}")),
            other => other,
        });
    }
    let mut failure: Option<LabError> = None;
    let inner_tol = tol / (4.0 * PI);
    let out = {
        let failure = &mut failure;
        let ks_cell = std::cell::RefCell::new(std::mem::take(ks));
        let r = adaptive_gk_split(
            |k| {
                if failure.is_some() {
                    return [0.0; 3];
                }
                let mut kv = ks_cell.borrow_mut();
                kv[level] = k;
                match nested_level(spec, t, x, &mut kv, level + 1, inner_tol, evals) {
                    Ok(v) => v,
                    Err(e) => {
                        *failure = Some(e);
                        [0.0; 3]
                    }
                }
            },
            -PI,
            PI,
            pieces,
            tol / 2.0,
            remaining,
        );
        *ks = ks_cell.into_inner();
        r
    };
    if let Some(e) = failure {
        return Err(e);
    }
    out
}

/// The complex convolution kernels K₁ = h⁰ − i(h⁻¹+h¹)/2 and K₂ = i(h¹−h⁻¹)/2.
fn combine(hm: f64, h0: f64, hp: f64) -> (C64, C64) {
    (C64::new(h0, -0.5 * (hm + hp)), C64::new(0.0, 0.5 * (hp - hm)))
}

/// T_t f = f ∗ K₁ + conj(f) ∗ K₂ with (f ∗ h)(x) = Σ_y f(y) h(x − y).
pub fn apply_tt(spec: &HarmonicSpec, f: &SiteFunction, t: f64) -> Result<SiteFunction> {
    match spec.l {
        Some(_) => {
            let k = kernels_finite(spec, t)?;
            apply_tt_with(spec, f, &k)
        }
        None => apply_tt_infinite(spec, f, t, INFINITE_TOL),
    }
}

/// Finite-volume T_t from precomputed kernels.
pub fn apply_tt_with(spec: &HarmonicSpec, f: &SiteFunction, k: &KernelTriple) -> Result<SiteFunction> {
    let n = spec.side()?;
    let vol = spec.volume().unwrap();
    let kern: Vec<(C64, C64)> = (0..vol).map(|i| combine(k.h_minus1[i], k.h_0[i], k.h_plus1[i])).collect();
    let mut out = vec![C64::new(0.0, 0.0); vol];
    let src: Vec<(Vec<usize>, C64)> = f
        .iter()
        .map(|(y, &z)| Ok((spec.digits(spec.site_index(y)?, n), z)))
        .collect::<Result<_>>()?;
    for (x, o) in out.iter_mut().enumerate() {
        let dx = spec.digits(x, n);
        for (dy, z) in &src {
            let mut idx = 0;
            for q in 0..spec.d {
                idx = idx * n + (dx[q] + n - dy[q]) % n;
            }
            let (k1, k2) = kern[idx];
            *o += z * k1 + z.conj() * k2;
        }
    }
    Ok(spec.from_dense(&out))
}

/// Number of sites of Z^d at ℓ¹ distance exactly r from the origin.
fn sphere_count(d: usize, r: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=d.min(r as usize) {
        let binom_d = binom(d as u64, k as u64);
        let binom_r = binom(r - 1, k as u64 - 1);
        total += 2f64.powi(k as i32) * binom_d * binom_r;
    }
    total
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Truncation radius beyond which the kernel tail, weighted by ‖f‖₁, is below tol.
fn truncation_radius(spec: &HarmonicSpec, t: f64, weight: f64, tol: f64) -> u64 {
    let mu = 1.0;
    let amp = spec.harmonic_constant(mu);
    let vt = spec.v_h(mu) * t.abs();
    let mut r = vt.ceil() as u64;
    loop {
        let tail: f64 = (r + 1..r + 400).map(|s| sphere_count(spec.d, s) * (-mu * (s as f64 - vt)).exp()).sum();
        if weight * amp * tail <= tol {
            return r;
        }
        r += 1;
    }
}

/// T_t f on Z^d, truncated where the Lemma tail drops below `tol`.
pub fn apply_tt_infinite(spec: &HarmonicSpec, f: &SiteFunction, t: f64, tol: f64) -> Result<SiteFunction> {
    if spec.is_finite() {
        return domain("infinite-volume evolution needs an infinite-volume spec");
    }
    if f.is_empty() {
        return Ok(SiteFunction::new());
    }
    let r = truncation_radius(spec, t, f.l1(), tol) as i64;
    let d = spec.d;
    let mut cache: HashMap<Vec<i64>, (C64, C64)> = HashMap::new();
    let mut targets: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
    for (y, _) in f.iter() {
        for off in ball(d, r) {
            let x: Vec<i64> = y.iter().zip(&off).map(|(a, b)| a + b).collect();
            targets.entry(x).or_insert(C64::new(0.0, 0.0));
        }
    }
    let ktol = tol / (f.l1() * 4.0).max(1.0);
    for (x, acc) in targets.iter_mut() {
        for (y, &z) in f.iter() {
            let key: Vec<i64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
            let (k1, k2) = match cache.get(&key) {
                Some(&v) => v,
                None => {
                    let h = kernels_infinite(d, spec.omega, &spec.lambda, t, &key, ktol)?;
                    let v = combine(h[0], h[1], h[2]);
                    cache.insert(key, v);
                    v
                }
            };
            *acc += z * k1 + z.conj() * k2;
        }
    }
    Ok(SiteFunction { values: targets })
}

fn ball(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut pts = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &pts {
            let used: i64 = p.iter().map(|c: &i64| c.abs()).sum();
            for c in -(r - used)..=(r - used) {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// Ω = ω² + discrete Laplacian coupling, so that H = Σ p² + qᵀΩq.
fn coupling_matrix(spec: &HarmonicSpec) -> Result<RMat> {
    let n = spec.side()?;
    let vol = spec.volume().unwrap();
    let mut om = RMat::zeros(vol, vol);
    for x in 0..vol {
        om[(x, x)] += spec.omega * spec.omega;
        let dx = spec.digits(x, n);
        for j in 0..spec.d {
            let lam = spec.lambda[j];
            if lam == 0.0 {
                continue;
            }
            let mut dy = dx.clone();
            dy[j] = (dy[j] + 1) % n;
            let y = dy.iter().fold(0, |acc, &u| acc * n + u);
            om[(x, x)] += lam;
            om[(y, y)] += lam;
            om[(x, y)] -= lam;
            om[(y, x)] -= lam;
        }
    }
    Ok(om)
}

/// Evolves (Re f, Im f) by the exponentiated classical flow
/// d(Re f)/dt = −2Ω Im f, d(Im f)/dt = 2 Re f.
pub fn symplectic_oracle(spec: &HarmonicSpec, f: &SiteFunction, t: f64) -> Result<SiteFunction> {
    let vol = spec.volume().ok_or_else(|| LabError::Unsupported("oracle needs a finite volume".into()))?;
    if vol > ORACLE_CAP {
        return resource(format!("volume {vol} exceeds the oracle cap {ORACLE_CAP}"));
    }
    let om = coupling_matrix(spec)?;
    let mut gen = RMat::zeros(2 * vol, 2 * vol);
    for i in 0..vol {
        for j in 0..vol {
            gen[(i, vol + j)] = -2.0 * t * om[(i, j)];
        }
        gen[(vol + i, i)] = 2.0 * t;
    }
    let flow = expm(&gen);
    let fd = spec.to_dense(f)?;
    let mut ab = nalgebra::DVector::<f64>::zeros(2 * vol);
    for i in 0..vol {
        ab[i] = fd[i].re;
        ab[vol + i] = fd[i].im;
    }
    let out = flow * ab;
    let v: Vec<C64> = (0..vol).map(|i| C64::new(out[i], out[vol + i])).collect();
    Ok(spec.from_dense(&v))
}

/// Realified U and V: f = a + ib ↦ (a, b), adjoints become transposes.
pub fn bogoliubov_maps(spec: &HarmonicSpec) -> Result<(RMat, RMat)> {
    let n = spec.side()?;
    let vol = spec.volume().unwrap();
    let roots: Vec<C64> = (0..n).map(|m| C64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64)).collect();
    let digits: Vec<Vec<usize>> = (0..vol).map(|i| spec.digits(i, n)).collect();
    let ks = spec.dual_points()?;
    let scale = 1.0 / (vol as f64).sqrt();
    let mut four = nalgebra::DMatrix::<C64>::zeros(vol, vol);
    for k in 0..vol {
        for x in 0..vol {
            let m: usize = (0..spec.d).map(|q| digits[k][q] * digits[x][q]).sum();
            four[(k, x)] = roots[m % n] * scale;
        }
    }
    let mut gp = nalgebra::DMatrix::<C64>::zeros(vol, vol);
    let mut gm = nalgebra::DMatrix::<C64>::zeros(vol, vol);
    for (k, kv) in ks.iter().enumerate() {
        let g = dispersion(spec, kv);
        let (a, b) = (1.0 / g.sqrt(), g.sqrt());
        gp[(k, k)] = C64::new(a + b, 0.0);
        gm[(k, k)] = C64::new(a - b, 0.0);
    }
    let fa = four.adjoint();
    let half_i = C64::new(0.0, 0.5);
    let u = (&fa * gp * &four) * half_i;
    let v = (&fa * gm * &four) * half_i;
    let realify = |m: &nalgebra::DMatrix<C64>, conj: bool| {
        let mut r = RMat::zeros(2 * vol, 2 * vol);
        let s = if conj { -1.0 } else { 1.0 };
        for i in 0..vol {
            for j in 0..vol {
                let z = m[(i, j)];
                r[(i, j)] = z.re;
                r[(i, vol + j)] = -z.im * s;
                r[(vol + i, j)] = z.im;
                r[(vol + i, vol + j)] = z.re * s;
            }
        }
        r
    };
    Ok((realify(&u, false), realify(&v, true)))
}

/// (‖U*U − V*V − 1‖, ‖V*U − U*V‖).
pub fn bogoliubov_residuals(spec: &HarmonicSpec) -> Result<(f64, f64)> {
    let (u, v) = bogoliubov_maps(spec)?;
    let m = u.nrows();
    let r1 = u.transpose() * &u - v.transpose() * &v - RMat::identity(m, m);
    let r2 = v.transpose() * &u - u.transpose() * &v;
    Ok((rop_norm(&r1), rop_norm(&r2)))
}

/// ρ(W(f₁)⋯W(f_n)) in the harmonic ground state.
pub fn vacuum_weyl_expectation(spec: &HarmonicSpec, fs: &[SiteFunction]) -> Result<C64> {
    let vol = spec.volume().ok_or_else(|| LabError::Unsupported("vacuum state needs a finite volume".into()))?;
    let mut h = SiteFunction::new();
    let mut phase = 0.0;
    for g in fs {
        phase -= h.inner(g).im / 2.0;
        h = h.plus(g);
    }
    if fs.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    let (u, v) = bogoliubov_maps(spec)?;
    let hd = spec.to_dense(&h)?;
    let mut ab = nalgebra::DVector::<f64>::zeros(2 * vol);
    for i in 0..vol {
        ab[i] = hd[i].re;
        ab[vol + i] = hd[i].im;
    }
    let w = (u.transpose() - v.transpose()) * ab;
    Ok(C64::from_polar((-0.25 * w.norm_squared()).exp(), phase))
}

/// ‖[τ_t(W(f)), W(g)]‖ = 2|sin(Im⟨T_t f, g⟩/2)|.
pub fn weyl_commutator_norm(spec: &HarmonicSpec, f: &SiteFunction, g: &SiteFunction, t: f64) -> Result<f64> {
    let tf = apply_tt(spec, f, t)?;
    Ok(commutator_from_evolved(&tf, g))
}

pub fn commutator_from_evolved(tf: &SiteFunction, g: &SiteFunction) -> f64 {
    2.0 * (tf.inner(g).im / 2.0).sin().abs()
}

/// Σ_y |T_t f(y)| |g(y)|, the intermediate bound on the exact norm.
pub fn overlap_proxy(tf: &SiteFunction, g: &SiteFunction) -> f64 {
    g.iter().map(|(y, z)| z.norm() * tf.get(y).norm()).sum()
}

fn pair_sum(spec: &HarmonicSpec, f: &SiteFunction, g: &SiteFunction, w: impl Fn(u64) -> f64) -> f64 {
    let mut s = 0.0;
    for (x, a) in f.iter() {
        for (y, b) in g.iter() {
            s += a.norm() * b.norm() * w(spec.distance(x, y));
        }
    }
    s
}

/// C ΣΣ |f(x)||g(y)| e^{−μ(d(x,y) − v_h(μ)|t|)}.
pub fn harmonic_bound(spec: &HarmonicSpec, f: &SiteFunction, g: &SiteFunction, t: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return domain("μ must be positive");
    }
    let vt = spec.v_h(mu) * t.abs();
    Ok(spec.harmonic_constant(mu) * pair_sum(spec, f, g, |r| (-mu * (r as f64 - vt)).exp()))
}

/// C(ε,μ) e^{(μ+ε)v_h(μ+ε)|t|} ΣΣ |f||g| F_μ(d). On an infinite-volume
/// spec this is the Z^d bound with the same constants.
pub fn corollary_bound(
    spec: &HarmonicSpec,
    f: &SiteFunction,
    g: &SiteFunction,
    t: f64,
    mu: f64,
    eps: f64,
) -> Result<f64> {
    if !(mu > 0.0) || !(eps > 0.0) {
        return domain("μ and ε must be positive");
    }
    let fm = DecayFunction::exp_power(mu, spec.d);
    let pre = spec.corollary_constant(mu, eps) * (spec.corollary_rate(mu, eps) * t.abs()).exp();
    Ok(pre * pair_sum(spec, f, g, |r| fm.at(r)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelDecayReport {
    pub t: f64,
    pub mu: f64,
    /// max over sites and kernels of |h(x)| − bound(x); negative when slack.
    pub max_excess: f64,
    /// Flat site index of the largest excess.
    pub worst_site: usize,
    pub pass: bool,
}

/// Pointwise check of the kernel decay estimates at time t.
pub fn kernel_decay_check(spec: &HarmonicSpec, t: f64, mu: f64) -> Result<KernelDecayReport> {
    let k = kernels_finite(spec, t)?;
    kernel_decay_check_triple(spec, &k, mu)
}

pub fn kernel_decay_check_triple(spec: &HarmonicSpec, k: &KernelTriple, mu: f64) -> Result<KernelDecayReport> {
    if !(mu > 0.0) {
        return domain("μ must be positive");
    }
    let vol = spec.volume().ok_or_else(|| LabError::Unsupported("decay check needs a finite volume".into()))?;
    let c = spec.c();
    let vt = spec.v_h(mu) * k.t.abs();
    let origin = vec![0i64; spec.d];
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_site = 0;
    for x in 0..vol {
        let r = spec.distance(&spec.site_coords(x), &origin) as f64;
        let base = (-mu * (r - vt)).exp();
        let ex = (k.h_0[x].abs() - base)
            .max(k.h_minus1[x].abs() - base / c)
            .max(k.h_plus1[x].abs() - c * (mu / 2.0).exp() * base);
        if ex > max_excess {
            max_excess = ex;
            worst_site = x;
        }
    }
    Ok(KernelDecayReport { t: k.t, mu, max_excess, worst_site, pass: max_excess <= 1e-12 })
}

/// The same pointwise check for the Z^d kernels on the box |x|_∞ ≤ radius,
/// with `tol` the quadrature accuracy; `worst_site` indexes the box in
/// lexicographic order.
pub fn infinite_kernel_decay_check(spec: &HarmonicSpec, t: f64, mu: f64, radius: i64, tol: f64) -> Result<KernelDecayReport> {
    if spec.is_finite() {
        return domain("expected an infinite-volume spec");
    }
    if !(mu > 0.0) || radius < 0 {
        return domain("μ must be positive and the radius non-negative");
    }
    let c = spec.c();
    let vt = spec.v_h(mu) * t.abs();
    let side = (2 * radius + 1) as usize;
    let count = side.pow(spec.d as u32);
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_site = 0;
    for idx in 0..count {
        let mut rest = idx;
        let x: Vec<i64> = (0..spec.d)
            .map(|_| {
                let c = (rest % side) as i64 - radius;
                rest /= side;
                c
            })
            .rev()
            .collect();
        let h = kernels_infinite(spec.d, spec.omega(), spec.lambda(), t, &x, tol)?;
        let r = x.iter().map(|v| v.unsigned_abs()).sum::<u64>() as f64;
        let base = (-mu * (r - vt)).exp();
        let ex = (h[1].abs() - base).max(h[0].abs() - base / c).max(h[2].abs() - c * (mu / 2.0).exp() * base);
        if ex > max_excess {
            max_excess = ex;
            worst_site = idx;
        }
    }
    Ok(KernelDecayReport { t, mu, max_excess, worst_site, pass: max_excess <= 2.0 * tol })
}

/// CSV (t, x, h_minus1, h_0, h_plus1); multi-dimensional sites are written
/// as `;`-joined coordinates.
pub fn kernels_csv(spec: &HarmonicSpec, ts: &[f64]) -> Result<String> {
    let mut table = Table::new(&["t", "x", "h_minus1", "h_0", "h_plus1"]);
    for &t in ts {
        let k = kernels_finite(spec, t)?;
        for i in 0..k.h_0.len() {
            let x = spec.site_coords(i).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
            table.row(vec![fmt17(t), x, fmt17(k.h_minus1[i]), fmt17(k.h_0[i]), fmt17(k.h_plus1[i])]);
        }
    }
    Ok(table.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(l: i64) -> HarmonicSpec {
        HarmonicSpec::finite(1, l, 1.0, vec![1.0]).unwrap()
    }

    #[test]
    fn kernels_at_time_zero() {
        let s = HarmonicSpec::finite(2, 3, 0.7, vec![1.0, 0.3]).unwrap();
        let k = kernels_finite(&s, 0.0).unwrap();
        for i in 0..k.h_0.len() {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((k.h_0[i] - want).abs() < 1e-12);
            assert!(k.h_minus1[i].abs() < 1e-12 && k.h_plus1[i].abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_oracle() {
        let s = chain(16);
        let f = SiteFunction::delta(vec![0]);
        let a = apply_tt(&s, &f, 0.7).unwrap();
        let b = symplectic_oracle(&s, &f, 0.7).unwrap();
        assert!(a.max_diff(&b) < 1e-8, "{}", a.max_diff(&b));
        let g = SiteFunction::from_pairs(vec![(vec![3], C64::new(0.2, -1.1)), (vec![-5], C64::new(-0.4, 0.3))]);
        let a = apply_tt(&s, &g, 1.3).unwrap();
        let b = symplectic_oracle(&s, &g, 1.3).unwrap();
        assert!(a.max_diff(&b) < 1e-8);
    }

    #[test]
    fn bogoliubov_identities() {
        let (r1, r2) = bogoliubov_residuals(&HarmonicSpec::finite(1, 8, 0.6, vec![1.7]).unwrap()).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
        let (r1, r2) = bogoliubov_residuals(&HarmonicSpec::finite(1, 5, 1.3, vec![0.0]).unwrap()).unwrap();
        assert!(r1 < 1e-14 && r2 < 1e-14, "{r1} {r2}");
    }

    #[test]
    fn infinite_kernels_at_time_zero() {
        for x in [0i64, 1, 3] {
            let h = kernels_infinite(1, 1.0, &[1.0], 0.0, &[x], 1e-10).unwrap();
            let want = if x == 0 { 1.0 } else { 0.0 };
            assert!((h[1] - want).abs() < 1e-9 && h[0].abs() < 1e-9 && h[2].abs() < 1e-9);
        }
    }

    #[test]
    fn supremum_of_polynomial_weight() {
        assert_eq!(poly_exp_sup(5.0, 1), 1.0);
        let v = poly_exp_sup(0.5, 1);
        let brute = (0..100_000).map(|i| i as f64 * 1e-4).map(|s| (-0.5 * s).exp() * (1.0 + s).powi(2)).fold(0.0, f64::max);
        assert!((v - brute).abs() < 1e-6);
    }
}
