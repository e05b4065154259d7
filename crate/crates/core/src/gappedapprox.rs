//! Approximation of a gapped ground-state projector by local projections
//! on a region, its complement and a thickened boundary.

use crate::error::{domain, resource, Result};
use crate::lattice::SiteSet;
use crate::linalg::{eigh, op_norm, CMat, C64, ZERO};
use crate::lrbounds::{velocity_certificate, Interaction};
use crate::quantum::{dense_sum, gaussian_smooth, Layout, LocalOperator, SolverMode, SpectralModel, DENSE_CAP};
use serde::Serialize;
use std::collections::BTreeSet;

/// Sites of A with a nearest neighbour outside A.
pub fn inner_boundary(sites: &SiteSet, a: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = a.iter().copied().collect();
    a.iter()
        .copied()
        .filter(|&x| (0..sites.len()).any(|y| !set.contains(&y) && sites.distance(x, y) == 1))
        .collect()
}

/// {x : d(x, ∂A) < m}.
pub fn thickened(sites: &SiteSet, boundary: &[usize], m: usize) -> Vec<usize> {
    (0..sites.len())
        .filter(|&x| boundary.iter().any(|&y| (sites.distance(x, y) as usize) < m))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSplit {
    pub ell: usize,
    pub a: Vec<usize>,
    pub complement: Vec<usize>,
    pub boundary: Vec<usize>,
    pub interior: Vec<usize>,
    pub shell: Vec<usize>,
    pub exterior: Vec<usize>,
    pub interior_empty: bool,
    pub exterior_empty: bool,
}

/// I(ℓ), B(ℓ), E(ℓ) for A ⊆ Λ.
pub fn region_split(sites: &SiteSet, a: &[usize], ell: usize) -> Result<RegionSplit> {
    if ell == 0 {
        return domain("ℓ must be at least 1");
    }
    let mut a: Vec<usize> = a.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.is_empty() || a.iter().any(|&x| x >= sites.len()) {
        return domain("A must be a nonempty subset of the site set");
    }
    let aset: BTreeSet<usize> = a.iter().copied().collect();
    let boundary = inner_boundary(sites, &a);
    let far = |x: usize| boundary.iter().all(|&y| sites.distance(x, y) as usize >= ell);
    let interior: Vec<usize> = a.iter().copied().filter(|&x| far(x)).collect();
    let complement: Vec<usize> = (0..sites.len()).filter(|x| !aset.contains(x)).collect();
    let exterior: Vec<usize> = complement.iter().copied().filter(|&x| far(x)).collect();
    let shell = thickened(sites, &boundary, ell);
    Ok(RegionSplit {
        ell,
        interior_empty: interior.is_empty(),
        exterior_empty: exterior.is_empty(),
        a,
        complement,
        boundary,
        interior,
        shell,
        exterior,
    })
}

#[derive(Clone, Debug, Default)]
pub struct TermPartition {
    pub interior: Vec<LocalOperator>,
    pub shell: Vec<LocalOperator>,
    pub exterior: Vec<LocalOperator>,
    /// Terms meeting both I and E (assigned to H_I).
    pub repeated: usize,
}

impl RegionSplit {
    /// H_I: terms meeting I; H_E: remaining terms meeting E; H_B: terms inside B.
    pub fn partition(&self, terms: &[LocalOperator]) -> TermPartition {
        let i: BTreeSet<usize> = self.interior.iter().copied().collect();
        let e: BTreeSet<usize> = self.exterior.iter().copied().collect();
        let mut out = TermPartition::default();
        for t in terms {
            let hits_i = t.support().iter().any(|x| i.contains(x));
            let hits_e = t.support().iter().any(|x| e.contains(x));
            if hits_i && hits_e {
                out.repeated += 1;
            }
            if hits_i {
                out.interior.push(t.clone());
            } else if hits_e {
                out.exterior.push(t.clone());
            } else {
                out.shell.push(t.clone());
            }
        }
        out
    }
}

/// Finite system given by its full list of local terms.
#[derive(Clone, Debug)]
pub struct GappedSystem {
    pub sites: SiteSet,
    pub terms: Vec<LocalOperator>,
    pub local_dim: usize,
    pub interaction: Interaction,
}

impl GappedSystem {
    pub fn new(sites: SiteSet, interaction: Interaction, onsite: Vec<LocalOperator>, local_dim: usize) -> Result<Self> {
        let mut terms = onsite;
        terms.extend(interaction.terms().cloned());
        if terms.iter().flat_map(|t| t.support()).any(|&x| x >= sites.len()) {
            return domain("term outside the site set");
        }
        Ok(GappedSystem { sites, terms, local_dim, interaction })
    }

    /// Transverse-field Ising chain −J Σσ³σ³ − h Σσ¹.
    pub fn tfim(n: usize, j: f64, h: f64) -> Result<Self> {
        let (phi, onsite) = crate::models::tfim(n, j, h, false)?;
        GappedSystem::new(SiteSet::path(n), phi, onsite, 2)
    }

    pub fn layout(&self, region: &[usize]) -> Layout {
        Layout::uniform(region.to_vec(), self.local_dim)
    }

    pub fn full_layout(&self) -> Layout {
        self.layout(&(0..self.sites.len()).collect::<Vec<_>>())
    }

    /// Terms with support inside `region`.
    pub fn terms_in(&self, region: &[usize]) -> Vec<LocalOperator> {
        let r: BTreeSet<usize> = region.iter().copied().collect();
        self.terms.iter().filter(|t| t.support().iter().all(|x| r.contains(x))).cloned().collect()
    }

    /// Dense model of the terms inside `region`.
    pub fn model_on(&self, region: &[usize]) -> Result<SpectralModel> {
        let layout = self.layout(region);
        if layout.dim() > DENSE_CAP {
            return resource(format!("region of dimension {} exceeds the dense cap", layout.dim()));
        }
        SpectralModel::from_terms(&self.terms_in(region), &layout, SolverMode::Dense)
    }

    /// Dynamics of the terms inside `region`, acting on the larger `layout`.
    pub fn generator(&self, region: &[usize], layout: &Layout) -> Result<SpectralModel> {
        if layout.dim() > DENSE_CAP {
            return resource(format!("region of dimension {} exceeds the dense cap", layout.dim()));
        }
        SpectralModel::from_terms(&self.terms_in(region), layout, SolverMode::Dense)
    }

    /// (a, v) from the Lieb-Robinson velocity certificate of the interaction.
    pub fn lr_constants(&self, grid: &[f64]) -> Result<(f64, f64)> {
        velocity_certificate(&self.interaction, &self.sites, self.sites.dim(), grid)
    }
}

fn shifted_sum(terms: &[LocalOperator], layout: &Layout, psi: &nalgebra::DVector<C64>, full: &Layout) -> Result<(LocalOperator, f64)> {
    if terms.is_empty() {
        return Ok((LocalOperator::from_layout(layout.clone(), CMat::zeros(layout.dim(), layout.dim()))?, 0.0));
    }
    let h = dense_sum(terms, layout)?;
    let hpsi = h.apply(full, psi)?;
    let e = psi.dotc(&hpsi).re;
    let shifted = h.with_matrix(h.matrix() - CMat::identity(layout.dim(), layout.dim()) * C64::new(e, 0.0))?;
    Ok((shifted, e))
}

#[derive(Clone, Debug)]
pub struct SmoothedDecomposition {
    pub alpha: f64,
    pub k_a: LocalOperator,
    pub k_b: LocalOperator,
    pub k_rest: LocalOperator,
    /// ‖(H − E₀) − (K_A + K_B + K_rest)‖.
    pub residual_sum: f64,
    /// ‖K_A ψ₀‖, ‖K_B ψ₀‖, ‖K_rest ψ₀‖.
    pub residual_gs: [f64; 3],
    /// Ground-state expectations removed from H_I, H_B, H_E.
    pub shifts: [f64; 3],
}

impl SmoothedDecomposition {
    pub fn eps_emp(&self) -> f64 {
        self.residual_gs.iter().copied().fold(0.0, f64::max)
    }
}

/// α = a v²/(2ℓ).
pub fn smoothing_alpha(a: f64, v: f64, ell: usize) -> f64 {
    a * v * v / (2.0 * ell as f64)
}

/// Gaussian-smoothed H_I, H_B, H_E under the dynamics of A, B(2ℓ) and Λ∖A.
/// Each K lives on its region together with the support of the smoothed terms.
pub fn smoothed_terms(sys: &GappedSystem, full: &SpectralModel, split: &RegionSplit, alpha: f64) -> Result<SmoothedDecomposition> {
    if !(alpha > 0.0) {
        return domain("α must be positive");
    }
    let psi = full.ground_state();
    let full_layout = full.layout().clone();
    let part = split.partition(&sys.terms);
    let b2 = thickened(&sys.sites, &split.boundary, 2 * split.ell);
    let regions = [split.a.clone(), b2, split.complement.clone()];
    let groups = [&part.interior, &part.shell, &part.exterior];
    let mut ks = Vec::new();
    let mut shifts = [0.0; 3];
    for (k, (region, group)) in regions.iter().zip(groups).enumerate() {
        if region.is_empty() {
            ks.push(None);
            continue;
        }
        let mut span: BTreeSet<usize> = region.iter().copied().collect();
        span.extend(group.iter().flat_map(|t| t.support().iter().copied()));
        let layout = sys.layout(&span.into_iter().collect::<Vec<_>>());
        let (h, e) = shifted_sum(group, &layout, &psi, &full_layout)?;
        shifts[k] = e;
        let gen = sys.generator(region, &layout)?;
        ks.push(Some(gaussian_smooth(&h, alpha, &gen)?));
    }
    let empty = || LocalOperator::from_layout(Layout::uniform(vec![0], sys.local_dim), CMat::zeros(sys.local_dim, sys.local_dim));
    let mut it = ks.into_iter().map(|k| k.map_or_else(empty, Ok));
    let (k_a, k_b, k_rest) = (it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?);
    let mut sum = full.dense_hamiltonian().expect("dense full model").matrix().clone();
    let dim = sum.nrows();
    sum -= CMat::identity(dim, dim) * C64::new(full.ground_energy(), 0.0);
    let mut residual_gs = [0.0; 3];
    for (i, k) in [&k_a, &k_b, &k_rest].into_iter().enumerate() {
        let emb = k.embed_layout(&full_layout)?;
        residual_gs[i] = (emb.matrix() * &psi).norm();
        sum -= emb.matrix();
    }
    Ok(SmoothedDecomposition { alpha, k_a, k_b, k_rest, residual_sum: op_norm(&sum), residual_gs, shifts })
}

/// Spectral projection of a self-adjoint K onto eigenvalues with |λ| ≤ threshold.
pub fn low_energy_projector(k: &LocalOperator, threshold: f64) -> Result<LocalOperator> {
    let (vals, basis) = eigh(k.matrix());
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() <= threshold).collect();
    if keep.is_empty() {
        return domain(format!("no eigenvalue of K within {threshold:e}; spectrum {vals:?}"));
    }
    let u = basis.to_complex();
    let cols: Vec<_> = keep.iter().map(|&i| u.column(i).into_owned()).collect();
    let q = CMat::from_columns(&cols);
    k.with_matrix(&q * q.adjoint())
}

/// (P_A, P_rest) with their commutator defects ‖[P, K]‖.
pub fn low_energy_projectors(k_a: &LocalOperator, k_rest: &LocalOperator, threshold: f64) -> Result<(LocalOperator, LocalOperator, f64)> {
    let pa = low_energy_projector(k_a, threshold)?;
    let pr = low_energy_projector(k_rest, threshold)?;
    let defect = |p: &LocalOperator, k: &LocalOperator| op_norm(&(p.matrix() * k.matrix() - k.matrix() * p.matrix()));
    Ok((pa.clone(), pr.clone(), defect(&pa, k_a).max(defect(&pr, k_rest))))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PAlphaCheck {
    pub deviation: f64,
    pub bound: f64,
    pub pass: bool,
}

/// √(α/π)∫ e^{it(H−E₀)} e^{−αt²} dt = Σ e^{−(E−E₀)²/(4α)} |E⟩⟨E|.
pub fn p_alpha(m: &SpectralModel, alpha: f64) -> Result<(LocalOperator, PAlphaCheck)> {
    if !(alpha > 0.0) {
        return domain("α must be positive");
    }
    let e0 = m.ground_energy();
    let pa = m.spectral_function(|e| (-(e - e0).powi(2) / (4.0 * alpha)).exp())?;
    let p0 = m.ground_projector()?;
    let deviation = op_norm(&(pa.matrix() - p0.matrix()));
    let bound = (-m.gap().powi(2) / (4.0 * alpha)).exp();
    Ok((pa, PAlphaCheck { deviation, bound, pass: deviation <= bound + 1e-12 }))
}

/// √(α/π)∫ e^{itK} e^{−itK₀} e^{−αt²} dt in closed form from the two
/// eigenbases: U [(U†W)_{jk} e^{−(E_j − F_k)²/(4α)}] W†.
pub fn gaussian_interaction_average(k: &CMat, k0: &CMat, alpha: f64) -> CMat {
    let (e, ub) = eigh(k);
    let (f, wb) = eigh(k0);
    let u = ub.to_complex();
    let w = wb.to_complex();
    let m = u.adjoint() * &w;
    let damped = CMat::from_fn(m.nrows(), m.ncols(), |j, l| m[(j, l)] * (-(e[j] - f[l]).powi(2) / (4.0 * alpha)).exp());
    u * damped * w.adjoint()
}

#[derive(Clone, Debug)]
pub struct BoundaryResult {
    pub p_b: LocalOperator,
    pub final_residual: f64,
    pub p_b_norm: f64,
    pub idempotence_defect: f64,
    pub support: Vec<usize>,
}

/// P_B = normalized partial trace of P̃_B onto B(3ℓ), and ‖P_B(P_A ⊗ P_rest) − P₀‖.
pub fn boundary_operator(
    full: &SpectralModel,
    split: &RegionSplit,
    dec: &SmoothedDecomposition,
    p_a: &LocalOperator,
    p_rest: &LocalOperator,
    sites: &SiteSet,
) -> Result<BoundaryResult> {
    let lay = full.layout();
    let ka = dec.k_a.embed_layout(lay)?;
    let kr = dec.k_rest.embed_layout(lay)?;
    let kb = dec.k_b.embed_layout(lay)?;
    let k0 = ka.matrix() + kr.matrix();
    let k = &k0 + kb.matrix();
    let tilde = gaussian_interaction_average(&k, &k0, dec.alpha);
    let support = thickened(sites, &split.boundary, 3 * split.ell);
    let tilde_op = LocalOperator::from_layout(lay.clone(), tilde)?;
    let p_b = if support.len() == lay.sites.len() { tilde_op } else { tilde_op.partial_trace(&support)? };
    let pb_full = p_b.embed_layout(lay)?;
    let proj = p_a.embed_layout(lay)?.matrix() * p_rest.embed_layout(lay)?.matrix();
    let p0 = full.ground_projector()?;
    let final_residual = op_norm(&(pb_full.matrix() * proj - p0.matrix()));
    let pb = p_b.matrix();
    Ok(BoundaryResult {
        p_b_norm: op_norm(pb),
        idempotence_defect: op_norm(&(pb * pb - pb)),
        p_b,
        final_residual,
        support,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub model: String,
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    pub ell: usize,
    pub lr_a: f64,
    pub lr_v: f64,
    pub alpha: f64,
    pub gap: f64,
    pub residual_sum: f64,
    pub residual_gs: [f64; 3],
    pub eps_emp: f64,
    pub partition_defect: f64,
    pub repeated_terms: usize,
    pub markov_pass: bool,
    pub step2: f64,
    pub step2_bound: f64,
    pub p_alpha: PAlphaCheck,
    pub final_residual: f64,
    pub norms: Norms,
    pub interior_empty: bool,
    pub exterior_empty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Norms {
    pub p_b: f64,
    pub p_b_idempotence: f64,
    pub projector_commutator: f64,
}

impl PipelineReport {
    pub fn step2_pass(&self) -> bool {
        self.step2 <= self.step2_bound + 1e-12
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// ‖H_I + H_B + H_E − H‖ on the full region.
pub fn partition_defect(sys: &GappedSystem, split: &RegionSplit) -> Result<f64> {
    let lay = sys.full_layout();
    let part = split.partition(&sys.terms);
    let mut all = part.interior.clone();
    all.extend(part.shell.iter().cloned());
    all.extend(part.exterior.iter().cloned());
    let dim = lay.dim();
    let sum = if all.is_empty() { CMat::from_element(dim, dim, ZERO) } else { dense_sum(&all, &lay)?.into_matrix() };
    let h = dense_sum(&sys.terms, &lay)?;
    Ok(op_norm(&(sum - h.matrix())))
}

/// Full pipeline for one ℓ, with (a, v) supplied by the caller.
pub fn run_pipeline(sys: &GappedSystem, full: &SpectralModel, a_set: &[usize], ell: usize, lr: (f64, f64), label: &str) -> Result<PipelineReport> {
    if full.ground_degeneracy() != 1 {
        return domain("pipeline needs a unique ground state");
    }
    let split = region_split(&sys.sites, a_set, ell)?;
    let alpha = smoothing_alpha(lr.0, lr.1, ell);
    let dec = smoothed_terms(sys, full, &split, alpha)?;
    let eps = dec.eps_emp();
    let thr = eps.sqrt();
    let (p_a, p_rest, comm) = low_energy_projectors(&dec.k_a, &dec.k_rest, thr)?;
    let lay = full.layout();
    let psi = full.ground_state();
    let out_a = (&psi - p_a.embed_layout(lay)?.matrix() * &psi).norm();
    let out_r = (&psi - p_rest.embed_layout(lay)?.matrix() * &psi).norm();
    let markov_pass = out_a <= dec.residual_gs[0] / thr + 1e-12 && out_r <= dec.residual_gs[2] / thr + 1e-12;
    let p0 = full.ground_projector()?;
    let prod = p_a.embed_layout(lay)?.matrix() * p_rest.embed_layout(lay)?.matrix();
    let dim = prod.nrows();
    let step2 = op_norm(&(p0.matrix() * (CMat::identity(dim, dim) - prod)));
    let (_, pcheck) = p_alpha(full, alpha)?;
    let b = boundary_operator(full, &split, &dec, &p_a, &p_rest, &sys.sites)?;
    Ok(PipelineReport {
        model: label.to_string(),
        a: split.a.clone(),
        ell,
        lr_a: lr.0,
        lr_v: lr.1,
        alpha,
        gap: full.gap(),
        residual_sum: dec.residual_sum,
        residual_gs: dec.residual_gs,
        eps_emp: eps,
        partition_defect: partition_defect(sys, &split)?,
        repeated_terms: split.partition(&sys.terms).repeated,
        markov_pass,
        step2,
        step2_bound: 2.0 * thr,
        p_alpha: pcheck,
        final_residual: b.final_residual,
        norms: Norms { p_b: b.p_b_norm, p_b_idempotence: b.idempotence_defect, projector_commutator: comm },
        interior_empty: split.interior_empty,
        exterior_empty: split.exterior_empty,
    })
}

/// Smallest C with ε(ℓ) = C J² |∂A| ℓ^{d−1/2} e^{−ℓ/ξ} ≥ ε_emp(ℓ) on the sweep,
/// ξ = 2 max(1/a, a v²/γ²).
pub fn fitted_epsilon_constant(reports: &[PipelineReport], j: f64, boundary: usize, d: usize) -> f64 {
    reports
        .iter()
        .map(|r| {
            let xi = 2.0 * (1.0 / r.lr_a).max(r.lr_a * r.lr_v * r.lr_v / (r.gap * r.gap));
            let shape = j * j * boundary as f64 * (r.ell as f64).powf(d as f64 - 0.5) * (-(r.ell as f64) / xi).exp();
            r.eps_emp / shape
        })
        .fold(0.0, f64::max)
}

/// Non-increasing up to at most one violating step.
pub fn mostly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).filter(|w| w[1] > w[0]).count() <= 1
}
