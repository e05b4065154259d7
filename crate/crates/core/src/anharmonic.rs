//! Weyl-type anharmonic perturbations given by finite even measures, and
//! the Lieb-Robinson bounds for the perturbed oscillator dynamics.

use crate::error::{domain, Result};
use crate::harmonic::{HarmonicSpec, SiteFunction};
use crate::lattice::{sufficient_constant, DecayFunction, SiteSet};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const PAIRING_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub re: f64,
    pub im: f64,
    pub w: f64,
}

impl Atom {
    pub fn new(z: C64, w: f64) -> Self {
        Atom { re: z.re, im: z.im, w }
    }
    pub fn z(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Checks weights and the pairing z ↔ −z with equal weight.
fn check_even(atoms: &[(Vec<C64>, f64)]) -> Result<()> {
    let mut used = vec![false; atoms.len()];
    for i in 0..atoms.len() {
        let (z, w) = &atoms[i];
        if !(*w > 0.0) || !w.is_finite() {
            return domain("atom weights must be positive and finite");
        }
        if used[i] {
            continue;
        }
        let scale = z.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let partner = (0..atoms.len()).find(|&j| {
            !used[j]
                && (j != i || z.iter().all(|c| c.norm() <= PAIRING_TOL * scale))
                && (atoms[j].1 - w).abs() <= PAIRING_TOL * w
                && atoms[j].0.iter().zip(z).all(|(a, b)| (a + b).norm() <= PAIRING_TOL * scale)
        });
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return domain(format!("measure is not even: atom {i} has no partner at −z")),
        }
    }
    Ok(())
}

/// A finite even measure μ_x on C attached to one site.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteMeasure {
    site: Vec<i64>,
    atoms: Vec<Atom>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteMeasureJson {
    site: Vec<i64>,
    atoms: Vec<Atom>,
}

impl SiteMeasure {
    pub fn new(site: Vec<i64>, atoms: Vec<Atom>) -> Result<Self> {
        let a: Vec<(Vec<C64>, f64)> = atoms.iter().map(|a| (vec![a.z()], a.w)).collect();
        check_even(&a)?;
        Ok(SiteMeasure { site, atoms })
    }

    /// The symmetric pair {z, −z} with weight w each.
    pub fn cosine(site: Vec<i64>, z: C64, w: f64) -> Result<Self> {
        Self::new(site, vec![Atom::new(z, w), Atom::new(-z, w)])
    }

    pub fn site(&self) -> &[i64] {
        &self.site
    }
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// ∫ |z|² |μ_x|(dz).
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.w * a.z().norm_sqr()).sum()
    }

    pub fn to_multi(&self) -> MultiSiteMeasure {
        MultiSiteMeasure {
            sites: vec![self.site.clone()],
            atoms: self.atoms.iter().map(|a| MultiAtom { re: vec![a.re], im: vec![a.im], w: a.w }).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SiteMeasureJson = serde_json::from_str(s)?;
        Self::new(j.site, j.atoms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiAtom {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub w: f64,
}

impl MultiAtom {
    pub fn z(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(&a, &b)| C64::new(a, b)).collect()
    }
}

/// A finite even measure μ_X on C^X.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiSiteMeasure {
    sites: Vec<Vec<i64>>,
    atoms: Vec<MultiAtom>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiSiteMeasureJson {
    sites: Vec<Vec<i64>>,
    atoms: Vec<MultiAtom>,
}

impl MultiSiteMeasure {
    pub fn new(sites: Vec<Vec<i64>>, atoms: Vec<MultiAtom>) -> Result<Self> {
        let mut sorted = sites.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != sites.len() || sites.is_empty() {
            return domain("support must be a nonempty set of distinct sites");
        }
        if atoms.iter().any(|a| a.re.len() != sites.len() || a.im.len() != sites.len()) {
            return domain("atom length does not match the support");
        }
        let a: Vec<(Vec<C64>, f64)> = atoms.iter().map(|a| (a.z(), a.w)).collect();
        check_even(&a)?;
        Ok(MultiSiteMeasure { sites, atoms })
    }

    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }
    pub fn atoms(&self) -> &[MultiAtom] {
        &self.atoms
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: MultiSiteMeasureJson = serde_json::from_str(s)?;
        Self::new(j.sites, j.atoms)
    }
}

/// κ = max_x Σ_atoms w|z|², measures on the same site added together.
pub fn kappa(measures: &[SiteMeasure]) -> f64 {
    let mut per_site: BTreeMap<&[i64], f64> = BTreeMap::new();
    for m in measures {
        *per_site.entry(m.site()).or_insert(0.0) += m.second_moment();
    }
    per_site.values().fold(0.0, |a, &b| a.max(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaMu {
    pub kappa_mu: f64,
    pub pass: bool,
}

/// Smallest κ_μ with Σ_{X∋x,y} ∫|z_x||z_y| d|μ_X| ≤ κ_μ F(d(x,y)) for all pairs.
pub fn kappa_mu(spec: &HarmonicSpec, multi: &[MultiSiteMeasure], f: &DecayFunction) -> KappaMu {
    let mut pair: BTreeMap<(Vec<i64>, Vec<i64>), f64> = BTreeMap::new();
    for m in multi {
        for a in &m.atoms {
            let z = a.z();
            for (i, x) in m.sites.iter().enumerate() {
                for (j, y) in m.sites.iter().enumerate() {
                    *pair.entry((x.clone(), y.clone())).or_insert(0.0) += a.w * z[i].norm() * z[j].norm();
                }
            }
        }
    }
    let mut k = 0.0f64;
    for ((x, y), s) in &pair {
        k = k.max(s / f.at(spec.distance(x, y)));
    }
    KappaMu { kappa_mu: k, pass: k.is_finite() }
}

/// C_d = 2^{d+1} Σ_z (1+|z|)^{−(d+1)}, over the torus of `spec` or over Z^d.
pub fn convolution_constant(spec: &HarmonicSpec) -> Result<f64> {
    let d = spec.dim();
    let f = DecayFunction::power(d);
    match spec.half_width() {
        Some(l) => Ok(sufficient_constant(&SiteSet::torus(d, l)?, &f)),
        None => Ok(zd_convolution_constant(d)),
    }
}

/// 2^{d+1} Σ_{z∈Z^d} (1+|z|)^{−(d+1)} via shell counts with an integral tail.
pub fn zd_convolution_constant(d: usize) -> f64 {
    let p = (d + 1) as i32;
    let shells = 2_000_000u64;
    let mut sum = 1.0;
    for r in 1..=shells {
        sum += shell_count(d, r) * (1.0 + r as f64).powi(-p);
    }
    // shell_count ≈ 2^d r^{d−1}/(d−1)! so the remainder is ≈ that over R
    let lead = 2f64.powi(d as i32) / (1..d).map(|k| k as f64).product::<f64>();
    sum += lead / (shells as f64 + 1.0);
    2f64.powi(p) * sum
}

fn shell_count(d: usize, r: u64) -> f64 {
    let mut total = 0.0;
    for k in 1..=d.min(r as usize) {
        total += 2f64.powi(k as i32) * binom(d as u64, k as u64) * binom(r - 1, k as u64 - 1);
    }
    total
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn weighted_pairs(spec: &HarmonicSpec, f: &SiteFunction, g: &SiteFunction, fm: &DecayFunction) -> f64 {
    let mut s = 0.0;
    for (x, a) in f.iter() {
        for (y, b) in g.iter() {
            s += a.norm() * b.norm() * fm.at(spec.distance(x, y));
        }
    }
    s
}

/// Inputs common to all three bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnharmonicConstants {
    pub c: f64,
    pub v: f64,
    pub c_d: f64,
}

impl AnharmonicConstants {
    pub fn compute(spec: &HarmonicSpec, mu: f64, eps: f64) -> Result<Self> {
        if !(mu > 0.0) || !(eps > 0.0) {
            return domain("μ and ε must be positive");
        }
        Ok(AnharmonicConstants {
            c: spec.corollary_constant(mu, eps),
            v: spec.corollary_rate(mu, eps),
            c_d: convolution_constant(spec)?,
        })
    }

    /// c e^{(v + c·strength)|t|} · pair_sum.
    pub fn evaluate(&self, strength: f64, t: f64, pair_sum: f64) -> f64 {
        self.c * ((self.v + self.c * strength) * t.abs()).exp() * pair_sum
    }
}

/// c e^{(v + cκC_d)|t|} ΣΣ |f(x)||g(y)| F_μ(d(x,y)).
pub fn anharmonic_bound(
    spec: &HarmonicSpec,
    measures: &[SiteMeasure],
    f: &SiteFunction,
    g: &SiteFunction,
    t: f64,
    mu: f64,
    eps: f64,
) -> Result<f64> {
    let k = AnharmonicConstants::compute(spec, mu, eps)?;
    let fm = DecayFunction::exp_power(mu, spec.dim());
    Ok(k.evaluate(kappa(measures) * k.c_d, t, weighted_pairs(spec, f, g, &fm)))
}

/// c e^{(v + cκ_μC_d²)|t|} ΣΣ |f(x)||g(y)| F_μ(d(x,y)), with 0 < μ ≤ μ₁.
#[allow(clippy::too_many_arguments)]
pub fn multisite_bound(
    spec: &HarmonicSpec,
    multi: &[MultiSiteMeasure],
    f: &SiteFunction,
    g: &SiteFunction,
    t: f64,
    mu: f64,
    eps: f64,
    mu1: f64,
) -> Result<f64> {
    if !(mu <= mu1) {
        return domain(format!("μ = {mu} exceeds the admissible μ₁ = {mu1}"));
    }
    let k = AnharmonicConstants::compute(spec, mu, eps)?;
    let fm = DecayFunction::exp_power(mu, spec.dim());
    let km = kappa_mu(spec, multi, &fm);
    if !km.pass {
        return domain("the multi-site decay assumption fails: κ_μ is not finite");
    }
    Ok(k.evaluate(km.kappa_mu * k.c_d * k.c_d, t, weighted_pairs(spec, f, g, &fm)))
}

/// The single-site bound on Z^d.
pub fn infinite_volume_bound(
    spec: &HarmonicSpec,
    measures: &[SiteMeasure],
    f: &SiteFunction,
    g: &SiteFunction,
    t: f64,
    mu: f64,
    eps: f64,
) -> Result<f64> {
    if spec.is_finite() {
        return domain("infinite-volume bound needs an infinite-volume spec");
    }
    anharmonic_bound(spec, measures, f, g, t, mu, eps)
}
