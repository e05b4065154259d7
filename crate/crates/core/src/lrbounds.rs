//! Interactions, their norms and boundaries, and evaluation of the
//! Lieb-Robinson bound together with the iterated-commutator coefficients
//! a_n used as a brute-force oracle.

use crate::error::{domain, resource, Result};
use crate::lattice::{convolution_constant_exact, uniform_integral, DecayFunction, SiteSet};
use crate::quantum::{LocalOperator, SpectralModel};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Numerical slack on every bound comparison.
pub const EPS_NUM: f64 = 1e-8;

/// Finite map X ↦ Φ(X) of self-adjoint terms keyed by their support.
#[derive(Clone, Debug, Default)]
pub struct Interaction {
    terms: BTreeMap<Vec<usize>, (LocalOperator, f64)>,
}

impl Interaction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a term; terms with equal support are summed.
    pub fn add(&mut self, op: LocalOperator) -> Result<()> {
        if !op.is_self_adjoint() {
            return domain(format!("interaction term on {:?} is not self-adjoint", op.support()));
        }
        let key = op.support().to_vec();
        let merged = match self.terms.remove(&key) {
            Some((old, _)) => {
                if old.dims() != op.dims() {
                    return domain("local dimensions disagree for repeated support");
                }
                old.with_matrix(old.matrix() + op.matrix())?
            }
            None => op,
        };
        let n = merged.norm();
        self.terms.insert(key, (merged, n));
        Ok(())
    }

    pub fn from_terms(ops: impl IntoIterator<Item = LocalOperator>) -> Result<Self> {
        let mut phi = Interaction::new();
        for op in ops {
            phi.add(op)?;
        }
        Ok(phi)
    }

    pub fn terms(&self) -> impl Iterator<Item = &LocalOperator> {
        self.terms.values().map(|(op, _)| op)
    }

    /// (support, ‖Φ(X)‖) for the nonzero terms.
    pub fn supports(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.terms.iter().filter(|(_, v)| v.1 > 0.0).map(|(k, v)| (k.as_slice(), v.1))
    }

    pub fn get(&self, support: &[usize]) -> Option<&LocalOperator> {
        self.terms.get(support).map(|v| &v.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms whose support lies inside `sites`.
    pub fn restrict(&self, sites: &[usize]) -> Interaction {
        let set: BTreeSet<usize> = sites.iter().copied().collect();
        Interaction {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.iter().all(|s| set.contains(s)))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Largest site index touched plus one.
    pub fn extent(&self) -> usize {
        self.terms.keys().flat_map(|k| k.iter()).map(|s| s + 1).max().unwrap_or(0)
    }
}

/// max_{x,y} Σ_{X∋x,y} ‖Φ(X)‖ / F(d(x,y)).
pub fn interaction_norm(phi: &Interaction, f: &DecayFunction, s: &SiteSet) -> Result<f64> {
    let n = s.len();
    if phi.extent() > n {
        return domain("interaction support exceeds the site set");
    }
    let mut acc = vec![0.0f64; n * n];
    for (x_set, norm) in phi.supports() {
        for &x in x_set {
            for &y in x_set {
                acc[x * n + y] += norm;
            }
        }
    }
    let mut best = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let v = acc[x * n + y];
            if v > 0.0 {
                best = best.max(v / f.at(s.distance(x, y)));
            }
        }
    }
    Ok(best)
}

fn straddles(z: &[usize], x: &BTreeSet<usize>) -> bool {
    z.iter().any(|s| x.contains(s)) && z.iter().any(|s| !x.contains(s))
}

/// ∂_Φ X: sites of X lying in a nonzero term that straddles X and its
/// complement.
pub fn phi_boundary(phi: &Interaction, x: &[usize]) -> Vec<usize> {
    let xs: BTreeSet<usize> = x.iter().copied().collect();
    let mut out = BTreeSet::new();
    for (z, _) in phi.supports() {
        if straddles(z, &xs) {
            out.extend(z.iter().filter(|s| xs.contains(s)));
        }
    }
    out.into_iter().collect()
}

fn check_disjoint(s: &SiteSet, x: &[usize], y: &[usize]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return domain("X and Y must be nonempty");
    }
    if s.set_distance(x, y) == 0 {
        return domain("X and Y overlap; the bound requires d(X, Y) > 0");
    }
    Ok(())
}

fn double_sum(s: &SiteSet, f: &DecayFunction, xs: &[usize], ys: &[usize]) -> f64 {
    let terms: Vec<f64> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| f.at(s.distance(x, y))).collect();
    crate::linalg::pairwise_sum(&terms)
}

/// D(X,Y) = min(Σ_{∂X×Y} F, Σ_{X×∂Y} F).
pub fn d_factor(phi: &Interaction, f: &DecayFunction, s: &SiteSet, x: &[usize], y: &[usize]) -> Result<f64> {
    check_disjoint(s, x, y)?;
    let bx = phi_boundary(phi, x);
    let by = phi_boundary(phi, y);
    Ok(double_sum(s, f, &bx, y).min(double_sum(s, f, x, &by)))
}

/// Precomputed ‖Φ‖, C and the support data for repeated bound evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct BoundInputs {
    pub phi_norm: f64,
    pub conv_constant: f64,
    pub d_factor: f64,
}

impl BoundInputs {
    pub fn compute(phi: &Interaction, f: &DecayFunction, s: &SiteSet, x: &[usize], y: &[usize]) -> Result<Self> {
        Ok(BoundInputs {
            phi_norm: interaction_norm(phi, f, s)?,
            conv_constant: convolution_constant_exact(s, f)?,
            d_factor: d_factor(phi, f, s, x, y)?,
        })
    }

    pub fn bound(&self, norm_a: f64, norm_b: f64, t: f64) -> f64 {
        lr_bound_value(self.phi_norm, self.conv_constant, self.d_factor, norm_a, norm_b, t)
    }
}

/// (2‖A‖‖B‖/C)(e^{2C‖Φ‖|t|} − 1) D.
pub fn lr_bound_value(phi_norm: f64, c: f64, d: f64, norm_a: f64, norm_b: f64, t: f64) -> f64 {
    2.0 * norm_a * norm_b / c * (2.0 * c * phi_norm * t.abs()).exp_m1() * d
}

/// The bound for observables with supports X, Y at time t.
#[allow(clippy::too_many_arguments)]
pub fn lr_bound(
    phi: &Interaction,
    f: &DecayFunction,
    c: f64,
    s: &SiteSet,
    x: &[usize],
    y: &[usize],
    norm_a: f64,
    norm_b: f64,
    t: f64,
) -> Result<f64> {
    if !(c > 0.0) {
        return domain("convolution constant must be positive");
    }
    let d = d_factor(phi, f, s, x, y)?;
    Ok(lr_bound_value(interaction_norm(phi, f, s)?, c, d, norm_a, norm_b, t))
}

/// 2‖Φ‖_μ C_μ / μ.
pub fn lr_velocity(phi_norm_mu: f64, c_mu: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return domain("decay rate μ must be positive");
    }
    Ok(2.0 * phi_norm_mu * c_mu / mu)
}

/// Exponential-form constants at rate μ for a given base F.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentialInputs {
    pub mu: f64,
    pub phi_norm_mu: f64,
    pub conv_constant_mu: f64,
    pub velocity: f64,
    pub uniform_integral: f64,
    pub boundary_min: usize,
    pub distance: u64,
}

impl ExponentialInputs {
    pub fn compute(phi: &Interaction, base: &DecayFunction, s: &SiteSet, x: &[usize], y: &[usize], mu: f64) -> Result<Self> {
        check_disjoint(s, x, y)?;
        let fmu = DecayFunction::exp_power(mu, base.dim());
        let phi_norm_mu = interaction_norm(phi, &fmu, s)?;
        let c_mu = convolution_constant_exact(s, &fmu)?;
        Ok(ExponentialInputs {
            mu,
            phi_norm_mu,
            conv_constant_mu: c_mu,
            velocity: lr_velocity(phi_norm_mu, c_mu, mu)?,
            uniform_integral: uniform_integral(s, base),
            boundary_min: phi_boundary(phi, x).len().min(phi_boundary(phi, y).len()),
            distance: s.set_distance(x, y),
        })
    }

    /// (2‖A‖‖B‖/C_μ) max_y Σ_x F · min(|∂X|,|∂Y|) · e^{−μ(d(X,Y) − v|t|)}.
    pub fn bound(&self, norm_a: f64, norm_b: f64, t: f64) -> f64 {
        2.0 * norm_a * norm_b / self.conv_constant_mu
            * self.uniform_integral
            * self.boundary_min as f64
            * (-self.mu * (self.distance as f64 - self.velocity * t.abs())).exp()
    }
}

/// Velocity certificate: the μ in `grid` minimising 2‖Φ‖_μ C_μ/μ.
pub fn velocity_certificate(phi: &Interaction, s: &SiteSet, d: usize, grid: &[f64]) -> Result<(f64, f64)> {
    let mut best = (f64::NAN, f64::INFINITY);
    for &mu in grid {
        let fmu = DecayFunction::exp_power(mu, d);
        let v = lr_velocity(interaction_norm(phi, &fmu, s)?, convolution_constant_exact(s, &fmu)?, mu)?;
        if v < best.1 {
            best = (mu, v);
        }
    }
    if best.0.is_nan() {
        return domain("empty μ grid");
    }
    Ok(best)
}

/// Default budget for enumerated surface chains.
pub const SERIES_BUDGET: usize = 1_000_000;

/// a_n = Σ_{Z₁∈S(X)} … Σ_{Zₙ∈S(Z_{n−1})} δ_Y(Zₙ) Π‖Φ(Z_i)‖.
pub fn series_coefficient(phi: &Interaction, x: &[usize], y: &[usize], n: usize) -> Result<f64> {
    if n == 0 {
        return domain("series index starts at 1");
    }
    let terms: Vec<(Vec<usize>, f64)> = phi.supports().map(|(k, v)| (k.to_vec(), v)).collect();
    let ys: BTreeSet<usize> = y.iter().copied().collect();
    let mut visited = 0usize;
    fn rec(
        terms: &[(Vec<usize>, f64)],
        current: &BTreeSet<usize>,
        depth: usize,
        ys: &BTreeSet<usize>,
        visited: &mut usize,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (z, w) in terms {
            if !straddles(z, current) {
                continue;
            }
            *visited += 1;
            if *visited > SERIES_BUDGET {
                return resource("series enumeration budget exceeded");
            }
            if depth == 1 {
                if z.iter().any(|s| ys.contains(s)) {
                    total += w;
                }
            } else {
                let zs: BTreeSet<usize> = z.iter().copied().collect();
                total += w * rec(terms, &zs, depth - 1, ys, visited)?;
            }
        }
        Ok(total)
    }
    let xs: BTreeSet<usize> = x.iter().copied().collect();
    rec(&terms, &xs, n, &ys, &mut visited)
}

/// ‖Φ‖ⁿ C^{n−1} Σ_{∂X×Y} F.
pub fn series_coefficient_bound(phi: &Interaction, f: &DecayFunction, s: &SiteSet, x: &[usize], y: &[usize], n: usize) -> Result<f64> {
    let norm = interaction_norm(phi, f, s)?;
    let c = convolution_constant_exact(s, f)?;
    let bx = phi_boundary(phi, x);
    Ok(norm.powi(n as i32) * c.powi(n as i32 - 1) * double_sum(s, f, &bx, y))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub pair: String,
    pub measured: f64,
    pub bound: f64,
}

impl BoundRow {
    pub fn margin(&self) -> f64 {
        self.bound - self.measured
    }
    pub fn pass(&self) -> bool {
        self.margin() >= -EPS_NUM
    }
}

/// Measured values against a bound on a grid of (t, pair) points.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundSummary {
    pub max_violation: f64,
    pub min_margin: f64,
    pub n_points: usize,
}

impl BoundReport {
    pub fn push(&mut self, t: f64, pair: impl Into<String>, measured: f64, bound: f64) {
        self.rows.push(BoundRow { t, pair: pair.into(), measured, bound });
    }

    pub fn extend(&mut self, other: BoundReport) {
        self.rows.extend(other.rows);
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(BoundRow::pass)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn summary(&self) -> BoundSummary {
        BoundSummary {
            max_violation: self.rows.iter().map(|r| (r.measured - r.bound).max(0.0)).fold(0.0, f64::max),
            min_margin: self.rows.iter().map(BoundRow::margin).fold(f64::INFINITY, f64::min),
            n_points: self.rows.len(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,pair,measured,bound,margin,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                crate::report::fmt17(r.t),
                r.pair,
                crate::report::fmt17(r.measured),
                crate::report::fmt17(r.bound),
                crate::report::fmt17(r.margin()),
                r.pass()
            ));
        }
        out
    }
}

/// Measured ‖[τ_t(A), B]‖ against the bound at each t.
#[allow(clippy::too_many_arguments)]
pub fn verify_lr(
    model: &SpectralModel,
    phi: &Interaction,
    f: &DecayFunction,
    s: &SiteSet,
    a: &LocalOperator,
    b: &LocalOperator,
    t_grid: &[f64],
    pair: &str,
) -> Result<BoundReport> {
    let inputs = BoundInputs::compute(phi, f, s, a.support(), b.support())?;
    let (na, nb) = (a.norm(), b.norm());
    sweep(model, a, b, t_grid, pair, |t| inputs.bound(na, nb, t))
}

/// The same sweep against the exponential form at rate μ.
#[allow(clippy::too_many_arguments)]
pub fn verify_lr_exponential(
    model: &SpectralModel,
    phi: &Interaction,
    base: &DecayFunction,
    s: &SiteSet,
    a: &LocalOperator,
    b: &LocalOperator,
    t_grid: &[f64],
    mu: f64,
    pair: &str,
) -> Result<BoundReport> {
    let inputs = ExponentialInputs::compute(phi, base, s, a.support(), b.support(), mu)?;
    let (na, nb) = (a.norm(), b.norm());
    sweep(model, a, b, t_grid, pair, |t| inputs.bound(na, nb, t))
}

fn sweep(
    model: &SpectralModel,
    a: &LocalOperator,
    b: &LocalOperator,
    t_grid: &[f64],
    pair: &str,
    bound: impl Fn(f64) -> f64 + Sync,
) -> Result<BoundReport> {
    use rayon::prelude::*;
    let prep = model.commutator_prep(a, b)?;
    let measured: Vec<f64> = t_grid.par_iter().map(|&t| prep.norm_at(t)).collect();
    let mut report = BoundReport::default();
    for (&t, m) in t_grid.iter().zip(measured) {
        report.push(t, pair, m, bound(t));
    }
    Ok(report)
}
