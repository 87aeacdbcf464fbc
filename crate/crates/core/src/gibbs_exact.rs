//! Exact enumeration of the Gibbs measure
//! `μ(σ) ∝ exp(β Σ_{uv ∈ E} J_uv σ_u σ_v + Σ_v h_v σ_v)` on small graphs.
//!
//! Configurations are bitmasks: bit `v` set means `σ_v = +1`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::linalg::pairwise_sum;
use crate::random_graph::{CouplingMap, SparseGraph};
use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Fixed spins, vertex to `±1`.
pub type Pinning = BTreeMap<usize, i8>;

#[inline]
pub fn spin(mask: u64, v: usize) -> f64 {
    if mask >> v & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Spin system on a sparse graph.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    graph: SparseGraph,
    couplings: CouplingMap,
    beta: f64,
    field: Vec<f64>,
}

impl GibbsModel {
    pub fn new(graph: SparseGraph, couplings: CouplingMap, beta: f64, field: Vec<f64>) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("inverse temperature {beta} must be finite and non-negative")));
        }
        if field.len() != graph.n() || field.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("field must hold one finite value per vertex"));
        }
        if couplings.values().len() != graph.m() {
            return Err(Error::invalid("coupling count does not match edge count"));
        }
        Ok(Self { graph, couplings, beta, field })
    }

    pub fn zero_field(graph: SparseGraph, couplings: CouplingMap, beta: f64) -> Result<Self> {
        let n = graph.n();
        Self::new(graph, couplings, beta, vec![0.0; n])
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    pub fn couplings(&self) -> &CouplingMap {
        &self.couplings
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `β Σ_w J_vw σ_w + h_v` for spins in `±1` form.
    pub fn local_field(&self, v: usize, spins: &[i8]) -> f64 {
        let s: f64 = self
            .graph
            .incident(v)
            .iter()
            .map(|&(w, e)| self.couplings.get(e) * spins[w] as f64)
            .sum();
        self.beta * s + self.field[v]
    }

    /// Unnormalised log-weight of a configuration.
    pub fn log_weight(&self, spins: &[i8]) -> f64 {
        let pair: f64 = self
            .graph
            .edges()
            .iter()
            .zip(self.couplings.values())
            .map(|(&(u, v), &j)| j * (spins[u] * spins[v]) as f64)
            .sum();
        let ext: f64 = self.field.iter().zip(spins).map(|(h, &s)| h * s as f64).sum();
        self.beta * pair + ext
    }

    pub fn pair_model(&self) -> PairModel {
        PairModel {
            n: self.n(),
            pairs: self
                .graph
                .edges()
                .iter()
                .zip(self.couplings.values())
                .map(|(&(u, v), &j)| (u, v, self.beta * j))
                .collect(),
            field: self.field.clone(),
        }
    }
}

/// Log-weight `Σ w_uv σ_u σ_v + Σ h_v σ_v` with temperature already folded in.
#[derive(Clone, Debug)]
pub struct PairModel {
    pub n: usize,
    pub pairs: Vec<(usize, usize, f64)>,
    pub field: Vec<f64>,
}

impl PairModel {
    /// Model `exp((β/2) σᵀMσ + ⟨σ, h⟩)` for a dense symmetric `M`.
    /// The diagonal only shifts the weight by a constant and is dropped.
    pub fn from_dense(m: &DMatrix<f64>, beta: f64, field: &[f64]) -> Result<Self> {
        let n = m.nrows();
        if !m.is_square() || field.len() != n {
            return Err(Error::invalid("interaction matrix and field sizes disagree"));
        }
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * (1.0 + m[(i, j)].abs()) {
                    return Err(Error::invalid("interaction matrix is not symmetric"));
                }
                if m[(i, j)] != 0.0 {
                    pairs.push((i, j, beta * m[(i, j)]));
                }
            }
        }
        Ok(Self { n, pairs, field: field.to_vec() })
    }

    pub fn log_weight(&self, mask: u64) -> f64 {
        let mut s = 0.0;
        for &(u, v, w) in &self.pairs {
            if (mask >> u ^ mask >> v) & 1 == 0 {
                s += w;
            } else {
                s -= w;
            }
        }
        for (v, &h) in self.field.iter().enumerate() {
            s += h * spin(mask, v);
        }
        s
    }

    /// `Σ_w w_vw σ_w + h_v`.
    pub fn local_field(&self, v: usize, mask: u64) -> f64 {
        let mut s = self.field[v];
        for &(a, b, w) in &self.pairs {
            if a == v {
                s += w * spin(mask, b);
            } else if b == v {
                s += w * spin(mask, a);
            }
        }
        s
    }

    /// Folds the pinned spins into the field of the remaining vertices.
    /// Returns the reduced model and the free vertices in increasing order.
    pub fn condition(&self, pinning: &Pinning) -> Result<(PairModel, Vec<usize>)> {
        for (&v, &s) in pinning {
            if v >= self.n {
                return Err(Error::invalid(format!("pinned vertex {v} out of range")));
            }
            if s != 1 && s != -1 {
                return Err(Error::invalid(format!("pinned spin {s} is not ±1")));
            }
        }
        let free: Vec<usize> = (0..self.n).filter(|v| !pinning.contains_key(v)).collect();
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in free.iter().enumerate() {
            local[v] = i;
        }
        let mut field: Vec<f64> = free.iter().map(|&v| self.field[v]).collect();
        let mut pairs = Vec::new();
        for &(u, v, w) in &self.pairs {
            match (pinning.get(&u), pinning.get(&v)) {
                (None, None) => pairs.push((local[u], local[v], w)),
                (Some(&s), None) => field[local[v]] += w * s as f64,
                (None, Some(&s)) => field[local[u]] += w * s as f64,
                (Some(_), Some(_)) => {}
            }
        }
        Ok((PairModel { n: free.len(), pairs, field }, free))
    }
}

/// Normalised Gibbs probabilities indexed by configuration mask.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    n: usize,
    probs: Vec<f64>,
    log_z: f64,
}

pub fn exact_distribution(m: &GibbsModel, cap: usize) -> Result<ExactDistribution> {
    exact_from_pairs(&m.pair_model(), cap)
}

pub fn exact_from_pairs(p: &PairModel, cap: usize) -> Result<ExactDistribution> {
    if p.n > cap || p.n > 62 {
        return Err(Error::TooLarge { n: p.n, cap: cap.min(62) });
    }
    let size = 1usize << p.n;
    let logw: Vec<f64> = (0..size as u64).map(|mask| p.log_weight(mask)).collect();
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logw.iter().map(|&l| (l - shift).exp()).collect();
    let total = pairwise_sum(&probs);
    for q in &mut probs {
        *q /= total;
    }
    Ok(ExactDistribution { n: p.n, probs, log_z: shift + total.ln() })
}

impl ExactDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn expectation(&self, f: impl Fn(u64) -> f64) -> f64 {
        let terms: Vec<f64> = self.probs.iter().enumerate().map(|(m, &p)| p * f(m as u64)).collect();
        pairwise_sum(&terms)
    }

    /// `E[σ_v]` for every vertex.
    pub fn marginals(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n];
        for (mask, &p) in self.probs.iter().enumerate() {
            for (v, a) in acc.iter_mut().enumerate() {
                *a += p * spin(mask as u64, v);
            }
        }
        acc
    }

    /// `Cov(σ_u, σ_v)`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut second = DMatrix::zeros(n, n);
        let mut first = vec![0.0; n];
        let mut s = vec![0.0; n];
        for (mask, &p) in self.probs.iter().enumerate() {
            for (v, x) in s.iter_mut().enumerate() {
                *x = spin(mask as u64, v);
                first[v] += p * *x;
            }
            for u in 0..n {
                let pu = p * s[u];
                for v in u..n {
                    second[(u, v)] += pu * s[v];
                }
            }
        }
        for u in 0..n {
            for v in u..n {
                let c = second[(u, v)] - first[u] * first[v];
                second[(u, v)] = c;
                second[(v, u)] = c;
            }
        }
        second
    }

    /// Total-variation distance to another distribution on the same masks.
    pub fn tv_distance(&self, other: &[f64]) -> Result<f64> {
        if other.len() != self.probs.len() {
            return Err(Error::invalid("distributions have different supports"));
        }
        Ok(0.5 * self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// Little-endian `f64` bytes of the probability vector.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.probs.iter().flat_map(|p| p.to_le_bytes()).collect()
    }
}

/// Pairwise influences `I(w, u) = P(σ_u = + | σ_w = +, τ) - P(σ_u = + | σ_w = -, τ)`
/// over the unpinned vertices.
#[derive(Clone, Debug)]
pub struct InfluenceMatrix {
    pub free: Vec<usize>,
    pub values: DMatrix<f64>,
}

impl InfluenceMatrix {
    /// Influence between original vertex labels, if both are free.
    pub fn get(&self, w: usize, u: usize) -> Option<f64> {
        let i = self.free.binary_search(&w).ok()?;
        let j = self.free.binary_search(&u).ok()?;
        Some(self.values[(i, j)])
    }
}

pub fn influence_matrix(m: &GibbsModel, pinning: &Pinning, cap: usize) -> Result<InfluenceMatrix> {
    influence_from_pairs(&m.pair_model(), pinning, cap)
}

pub fn influence_from_pairs(p: &PairModel, pinning: &Pinning, cap: usize) -> Result<InfluenceMatrix> {
    let (reduced, free) = p.condition(pinning)?;
    let k = reduced.n;
    if k > cap || k > 62 {
        return Err(Error::TooLarge { n: k, cap: cap.min(62) });
    }
    let size = 1u64 << k;
    let logw: Vec<f64> = (0..size).map(|mask| reduced.log_weight(mask)).collect();
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - shift).exp()).collect();
    // mass[w][s] and joint[w][s][u] = mass with σ_w = s and σ_u = +.
    let mut mass = vec![[0.0f64; 2]; k];
    let mut joint = vec![[vec![0.0f64; k], vec![0.0f64; k]]; k];
    for (mask, &q) in w.iter().enumerate() {
        let mask = mask as u64;
        for a in 0..k {
            let s = (mask >> a & 1) as usize;
            mass[a][s] += q;
            let row = &mut joint[a][s];
            for (u, r) in row.iter_mut().enumerate() {
                if mask >> u & 1 == 1 {
                    *r += q;
                }
            }
        }
    }
    let mut values = DMatrix::zeros(k, k);
    for a in 0..k {
        if !(mass[a][0] > 0.0) || !(mass[a][1] > 0.0) {
            return Err(Error::Degenerate(format!("vertex {} has a spin of zero conditional mass", free[a])));
        }
        for u in 0..k {
            values[(a, u)] = joint[a][1][u] / mass[a][1] - joint[a][0][u] / mass[a][0];
        }
    }
    Ok(InfluenceMatrix { free, values })
}

/// `Ent(f) = E[f log f] - E[f] log E[f]` for `f ≥ 0`.
pub fn entropy_functional(dist: &ExactDistribution, f: &[f64]) -> Result<f64> {
    if f.len() != dist.probs.len() {
        return Err(Error::invalid("function length does not match the state space"));
    }
    if f.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("entropy needs a finite non-negative function"));
    }
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    let mean = dist.expectation(|m| f[m as usize]);
    let first = dist.expectation(|m| xlogx(f[m as usize]));
    Ok((first - xlogx(mean)).max(0.0))
}

/// Heat-bath probability that site `v` flips away from its value in `mask`.
pub fn flip_probability(p: &PairModel, v: usize, mask: u64) -> f64 {
    let a = p.local_field(v, mask);
    crate::linalg::logistic(-2.0 * a * spin(mask, v))
}

/// Dirichlet form `½ Σ μ(σ) P(σ, τ) (f(σ) - f(τ)) (g(σ) - g(τ))` of the
/// single-site heat-bath chain with uniform site selection.
pub fn dirichlet_form(p: &PairModel, dist: &ExactDistribution, f: &[f64], g: &[f64]) -> Result<f64> {
    let size = dist.probs.len();
    if p.n != dist.n || f.len() != size || g.len() != size {
        return Err(Error::invalid("function length does not match the state space"));
    }
    let rate = 1.0 / p.n.max(1) as f64;
    let mut terms = Vec::with_capacity(size);
    for mask in 0..size as u64 {
        let mut s = 0.0;
        for v in 0..p.n {
            let other = mask ^ (1 << v);
            let q = rate * flip_probability(p, v, mask);
            s += q * (f[mask as usize] - f[other as usize]) * (g[mask as usize] - g[other as usize]);
        }
        terms.push(0.5 * dist.probs[mask as usize] * s);
    }
    Ok(pairwise_sum(&terms))
}
