//! Finite lattice regions, their metrics and the decay functions F, F_μ.

use crate::error::{domain, resource, LabError, Result};
use crate::linalg::pairwise_sum;
use serde::{Deserialize, Serialize};

/// Default cap on |S|³ for exhaustive convolution constants.
pub const DEFAULT_TRIPLE_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    GraphBox,
    Torus,
}

/// A finite set of lattice sites in Z^d with the ℓ¹ graph metric or the
/// torus metric on (−L, L]^d. Sites are kept in lexicographic order and
/// addressed by their index in that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteSet {
    dim: usize,
    kind: MetricKind,
    half_width: Option<i64>,
    sites: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct SiteSetJson {
    dim: usize,
    kind: MetricKind,
    #[serde(rename = "L")]
    l: Option<i64>,
    sites: Vec<Vec<i64>>,
}

impl SiteSet {
    /// Arbitrary finite subset of Z^d with the ℓ¹ metric.
    pub fn from_sites(dim: usize, mut sites: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be positive");
        }
        if sites.iter().any(|s| s.len() != dim) {
            return domain("site coordinate length does not match dimension");
        }
        sites.sort();
        sites.dedup();
        Ok(SiteSet { dim, kind: MetricKind::GraphBox, half_width: None, sites })
    }

    /// Sites 0, 1, …, n−1 on a line.
    pub fn path(n: usize) -> Self {
        SiteSet {
            dim: 1,
            kind: MetricKind::GraphBox,
            half_width: None,
            sites: (0..n as i64).map(|x| vec![x]).collect(),
        }
    }

    /// The box Π_j {0, …, n_j − 1}.
    pub fn boxed(extent: &[usize]) -> Self {
        let mut sites = vec![vec![]];
        for &n in extent {
            let mut next = Vec::with_capacity(sites.len() * n);
            for s in &sites {
                for x in 0..n as i64 {
                    let mut t = s.clone();
                    t.push(x);
                    next.push(t);
                }
            }
            sites = next;
        }
        sites.sort();
        SiteSet { dim: extent.len(), kind: MetricKind::GraphBox, half_width: None, sites }
    }

    /// The torus (−L, L]^d with its periodic metric.
    pub fn torus(dim: usize, l: i64) -> Result<Self> {
        if l < 1 || dim == 0 {
            return domain("torus needs L ≥ 1 and d ≥ 1");
        }
        let mut sites = vec![vec![]];
        for _ in 0..dim {
            let mut next = Vec::new();
            for s in &sites {
                for x in (-l + 1)..=l {
                    let mut t = s.clone();
                    t.push(x);
                    next.push(t);
                }
            }
            sites = next;
        }
        sites.sort();
        Ok(SiteSet { dim, kind: MetricKind::Torus, half_width: Some(l), sites })
    }

    /// A periodic ring of n sites labelled 0..n−1 (the ring metric).
    pub fn ring(n: usize) -> Self {
        SiteSet {
            dim: 1,
            kind: MetricKind::Torus,
            half_width: None,
            sites: (0..n as i64).map(|x| vec![x]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn kind(&self) -> MetricKind {
        self.kind
    }
    pub fn half_width(&self) -> Option<i64> {
        self.half_width
    }
    pub fn len(&self) -> usize {
        self.sites.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
    pub fn site(&self, i: usize) -> &[i64] {
        &self.sites[i]
    }
    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    pub fn index_of(&self, coords: &[i64]) -> Option<usize> {
        self.sites.binary_search_by(|s| s.as_slice().cmp(coords)).ok()
    }

    /// Distance between the sites with indices i and j.
    pub fn distance(&self, i: usize, j: usize) -> u64 {
        let (x, y) = (&self.sites[i], &self.sites[j]);
        match (self.kind, self.half_width) {
            (MetricKind::GraphBox, _) => x.iter().zip(y).map(|(a, b)| (a - b).unsigned_abs()).sum(),
            (MetricKind::Torus, Some(l)) => {
                x.iter().zip(y).map(|(a, b)| periodic_gap(a - b, 2 * l)).sum()
            }
            (MetricKind::Torus, None) => {
                let n = self.sites.len() as i64;
                x.iter().zip(y).map(|(a, b)| periodic_gap(a - b, n)).sum()
            }
        }
    }

    /// d(X, Y) = min over pairs.
    pub fn set_distance(&self, xs: &[usize], ys: &[usize]) -> u64 {
        let mut best = u64::MAX;
        for &x in xs {
            for &y in ys {
                best = best.min(self.distance(x, y));
            }
        }
        best
    }

    /// Nearest-neighbour pairs (i < j, distance 1).
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.distance(i, j) == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let j = SiteSetJson { dim: self.dim, kind: self.kind, l: self.half_width, sites: self.sites.clone() };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SiteSetJson = serde_json::from_str(s)?;
        match j.kind {
            MetricKind::GraphBox => {
                if j.l.is_some() {
                    return domain("graph-box site sets carry no L");
                }
                SiteSet::from_sites(j.dim, j.sites)
            }
            MetricKind::Torus => {
                let l = j.l.ok_or_else(|| LabError::Domain("torus needs L".into()))?;
                let t = SiteSet::torus(j.dim, l)?;
                let mut given = j.sites;
                given.sort();
                if given != t.sites {
                    return domain("torus sites must be exactly (−L, L]^d");
                }
                Ok(t)
            }
        }
    }
}

fn periodic_gap(diff: i64, period: i64) -> u64 {
    let r = diff.rem_euclid(period);
    r.min(period - r) as u64
}

/// Σ_j min_η |x_j − y_j + 2Lη| for x, y ∈ (−L, L]^d.
pub fn torus_distance(x: &[i64], y: &[i64], l: i64) -> Result<u64> {
    if l < 1 {
        return domain("torus half-width must be positive");
    }
    if x.len() != y.len() {
        return domain("coordinate dimension mismatch");
    }
    for &c in x.iter().chain(y) {
        if c <= -l || c > l {
            return domain(format!("coordinate {c} outside (−{l}, {l}]"));
        }
    }
    Ok(x.iter().zip(y).map(|(a, b)| periodic_gap(a - b, 2 * l)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecayFunction {
    Power { d: usize },
    ExpPower { mu: f64, d: usize },
}

impl DecayFunction {
    pub fn power(d: usize) -> Self {
        DecayFunction::Power { d }
    }

    pub fn exp_power(mu: f64, d: usize) -> Self {
        DecayFunction::ExpPower { mu, d }
    }

    pub fn dim(&self) -> usize {
        match *self {
            DecayFunction::Power { d } | DecayFunction::ExpPower { d, .. } => d,
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            DecayFunction::Power { .. } => 0.0,
            DecayFunction::ExpPower { mu, .. } => mu,
        }
    }

    /// F(r) = (1+r)^{−(d+1)}, times e^{−μr} for the exponential kind.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return domain(format!("decay function evaluated at negative distance {r}"));
        }
        Ok(self.eval(r))
    }

    /// Unchecked evaluation for r ≥ 0.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            DecayFunction::Power { d } => (1.0 + r).powi(-(d as i32 + 1)),
            DecayFunction::ExpPower { mu, d } => (-mu * r).exp() * (1.0 + r).powi(-(d as i32 + 1)),
        }
    }

    #[inline]
    pub fn at(&self, r: u64) -> f64 {
        self.eval(r as f64)
    }
}

/// max_{x,y} Σ_z F(d(x,z)) F(d(z,y)) / F(d(x,y)) by exhaustive enumeration.
pub fn convolution_constant_exact(s: &SiteSet, f: &DecayFunction) -> Result<f64> {
    convolution_constant_with_budget(s, f, DEFAULT_TRIPLE_BUDGET)
}

pub fn convolution_constant_with_budget(s: &SiteSet, f: &DecayFunction, budget: usize) -> Result<f64> {
    let n = s.len();
    if n == 0 {
        return domain("empty site set");
    }
    let triples = n.saturating_mul(n).saturating_mul(n);
    if triples > budget {
        return resource(format!("{triples} triples exceed the budget of {budget}"));
    }
    let fd: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f.at(s.distance(i, j))).collect()).collect();
    let mut best = 0.0f64;
    let mut terms = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                terms[z] = fd[x][z] * fd[z][y];
            }
            best = best.max(pairwise_sum(&terms) / fd[x][y]);
        }
    }
    Ok(best)
}

/// sup_x Σ_y F(d(x,y)).
pub fn uniform_integral(s: &SiteSet, f: &DecayFunction) -> f64 {
    let n = s.len();
    let mut row = vec![0.0; n];
    let mut best = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            row[y] = f.at(s.distance(x, y));
        }
        best = best.max(pairwise_sum(&row));
    }
    best
}

/// The sufficient constant 2^{d+1} Σ_{x∈S} F(|x|), with |x| the ℓ¹ norm of
/// the coordinates.
pub fn sufficient_constant(s: &SiteSet, f: &DecayFunction) -> f64 {
    let d = f.dim();
    let terms: Vec<f64> = s
        .sites()
        .iter()
        .map(|x| f.at(x.iter().map(|c| c.unsigned_abs()).sum()))
        .collect();
    2f64.powi(d as i32 + 1) * pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_examples() {
        assert_eq!(torus_distance(&[2], &[-1], 2).unwrap(), 1);
        assert_eq!(torus_distance(&[3, 3], &[-2, -2], 3).unwrap(), 2);
        assert!(torus_distance(&[-2], &[0], 2).is_err());
    }

    #[test]
    fn decay_examples() {
        let f = DecayFunction::power(1);
        assert_eq!(f.value(0.0).unwrap(), 1.0);
        assert_eq!(f.value(1.0).unwrap(), 0.25);
        assert!(f.value(-1.0).is_err());
        let g = DecayFunction::exp_power(1.0, 1);
        assert!((g.value(1.0).unwrap() - (-1.0f64).exp() / 4.0).abs() < 1e-16);
    }

    #[test]
    fn single_site_constants() {
        let s = SiteSet::path(1);
        let f = DecayFunction::power(2);
        assert_eq!(convolution_constant_exact(&s, &f).unwrap(), 1.0);
        assert_eq!(uniform_integral(&s, &f), 1.0);
    }

    #[test]
    fn budget_is_enforced() {
        let s = SiteSet::path(30);
        assert!(convolution_constant_exact(&s, &DecayFunction::power(1)).is_err());
    }

    #[test]
    fn ring_metric_wraps() {
        let r = SiteSet::ring(6);
        assert_eq!(r.distance(0, 5), 1);
        assert_eq!(r.distance(0, 3), 3);
        assert_eq!(r.bonds().len(), 6);
    }
}
