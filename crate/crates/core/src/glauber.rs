//! Heat-bath Glauber dynamics, block dynamics and exact chain diagnostics.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gibbs_exact::{exact_from_pairs, spin, ExactDistribution, GibbsModel, PairModel, Pinning};
use crate::gibbs_exact::{dirichlet_form, entropy_functional};
use crate::linalg::{logistic, sym_eigenvalues};
use crate::{Error, Result};

/// Largest system for which the full transition matrix is built.
pub const TRANSITION_CAP: usize = 14;

/// Single-site heat-bath updates on an arbitrary-size spin vector.
#[derive(Clone, Debug)]
pub struct HeatBath {
    offsets: Vec<usize>,
    nbrs: Vec<usize>,
    weights: Vec<f64>,
    field: Vec<f64>,
}

impl HeatBath {
    pub fn new(m: &GibbsModel) -> Self {
        Self::from_pairs(&m.pair_model())
    }

    pub fn from_pairs(p: &PairModel) -> Self {
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.n];
        for &(u, v, w) in &p.pairs {
            lists[u].push((v, w));
            lists[v].push((u, w));
        }
        let mut offsets = vec![0];
        let mut nbrs = Vec::new();
        let mut weights = Vec::new();
        for l in lists {
            for (v, w) in l {
                nbrs.push(v);
                weights.push(w);
            }
            offsets.push(nbrs.len());
        }
        Self { offsets, nbrs, weights, field: p.field.clone() }
    }

    pub fn n(&self) -> usize {
        self.field.len()
    }

    pub fn local_field(&self, v: usize, spins: &[i8]) -> f64 {
        let mut s = self.field[v];
        for k in self.offsets[v]..self.offsets[v + 1] {
            s += self.weights[k] * spins[self.nbrs[k]] as f64;
        }
        s
    }

    /// Probability that site `v` is resampled to `+1`.
    pub fn plus_probability(&self, v: usize, spins: &[i8]) -> f64 {
        logistic(2.0 * self.local_field(v, spins))
    }

    /// Resamples site `v` using the uniform variate `u`.
    pub fn update(&self, spins: &mut [i8], v: usize, u: f64) {
        spins[v] = if u < self.plus_probability(v, spins) { 1 } else { -1 };
    }

    /// One step at a uniformly chosen site; returns that site.
    pub fn step<R: Rng + ?Sized>(&self, spins: &mut [i8], rng: &mut R) -> usize {
        let v = rng.gen_range(0..self.n());
        let u = rng.gen::<f64>();
        self.update(spins, v, u);
        v
    }

    pub fn sweep<R: Rng + ?Sized>(&self, spins: &mut [i8], rng: &mut R) {
        for _ in 0..self.n() {
            self.step(spins, rng);
        }
    }
}

/// One heat-bath step on `state` for model `m`.
pub fn glauber_step<R: Rng + ?Sized>(state: &mut [i8], m: &GibbsModel, rng: &mut R) {
    if m.n() == 0 {
        return;
    }
    let v = rng.gen_range(0..m.n());
    let p = logistic(2.0 * m.local_field(v, state));
    state[v] = if rng.gen::<f64>() < p { 1 } else { -1 };
}

/// `-Σ_e J_e σ_u σ_v`.
pub fn energy(m: &GibbsModel, spins: &[i8]) -> f64 {
    -m.graph()
        .edges()
        .iter()
        .zip(m.couplings().values())
        .map(|(&(u, v), &j)| j * (spins[u] * spins[v]) as f64)
        .sum::<f64>()
}

pub fn magnetization(spins: &[i8]) -> f64 {
    if spins.is_empty() {
        return 0.0;
    }
    spins.iter().map(|&s| s as f64).sum::<f64>() / spins.len() as f64
}

pub fn spins_to_mask(spins: &[i8]) -> u64 {
    spins.iter().enumerate().fold(0, |m, (v, &s)| if s > 0 { m | 1 << v } else { m })
}

pub fn mask_to_spins(mask: u64, n: usize) -> Vec<i8> {
    (0..n).map(|v| if mask >> v & 1 == 1 { 1 } else { -1 }).collect()
}

/// Row-sparse stochastic matrix on configuration masks.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    fn from_maps(maps: Vec<BTreeMap<usize, f64>>) -> Self {
        Self { rows: maps.into_iter().map(|r| r.into_iter().collect()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                m[(i, j)] += p;
            }
        }
        m
    }

    /// `ν ↦ νP`.
    pub fn evolve(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, r) in self.rows.iter().enumerate() {
            let c = nu[i];
            if c == 0.0 {
                continue;
            }
            for &(j, p) in r {
                out[j] += c * p;
            }
        }
        out
    }

    pub fn row_sum_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|x| x.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |μ(x)P(x,y) - μ(y)P(y,x)|`.
    pub fn detailed_balance_residual(&self, mu: &[f64]) -> f64 {
        let dense = self.to_dense();
        let mut worst = 0.0f64;
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                worst = worst.max((mu[i] * p - mu[j] * dense[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn stationarity_residual(&self, mu: &[f64]) -> f64 {
        self.evolve(mu).iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Single-site heat-bath chain with uniform site choice.
pub fn transition_matrix(p: &PairModel) -> Result<TransitionMatrix> {
    if p.n > TRANSITION_CAP {
        return Err(Error::TooLarge { n: p.n, cap: TRANSITION_CAP });
    }
    let size = 1usize << p.n;
    let mut maps = vec![BTreeMap::new(); size];
    if p.n == 0 {
        maps[0].insert(0, 1.0);
        return Ok(TransitionMatrix::from_maps(maps));
    }
    let rate = 1.0 / p.n as f64;
    for (mask, row) in maps.iter_mut().enumerate() {
        let mut stay = 0.0;
        for v in 0..p.n {
            let q = crate::gibbs_exact::flip_probability(p, v, mask as u64);
            *row.entry(mask ^ (1 << v)).or_insert(0.0) += rate * q;
            stay += rate * (1.0 - q);
        }
        *row.entry(mask).or_insert(0.0) += stay;
    }
    Ok(TransitionMatrix::from_maps(maps))
}

/// Inverse absolute spectral gap `1 / (1 - max(λ₂, |λ_min|))` of a chain
/// reversible with respect to `mu`.
pub fn relaxation_time(p: &TransitionMatrix, mu: &[f64]) -> Result<f64> {
    let n = p.dim();
    if mu.len() != n {
        return Err(Error::invalid("stationary vector has the wrong length"));
    }
    if n == 1 {
        return Ok(1.0);
    }
    if mu.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Degenerate("stationary distribution has zero mass".into()));
    }
    let residual = p.detailed_balance_residual(mu);
    if residual > 1e-10 {
        return Err(Error::NonReversible(residual));
    }
    let sq: Vec<f64> = mu.iter().map(|x| x.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for &(j, q) in p.row(i) {
            s[(i, j)] += sq[i] * q / sq[j];
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym_eigenvalues(&s)?.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let second = eig[1].max(eig[n - 1].abs()).min(1.0);
    if second >= 1.0 - 1e-14 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (1.0 - second))
}

/// Exact relaxation time, mixing time and worst-start TV curve.
#[derive(Clone, Debug)]
pub struct ChainDiagnostics {
    pub relaxation_time: f64,
    pub mixing_time: usize,
    pub tv_curve: Vec<f64>,
}

/// `t ↦ max_σ ‖P^t(σ, ·) - μ‖_TV` for `t = 1..=steps`; nonincreasing.
pub fn worst_tv_curve(p: &TransitionMatrix, mu: &[f64], steps: usize) -> Vec<f64> {
    let n = p.dim();
    let mut cur: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut r = vec![0.0; n];
            r[s] = 1.0;
            r
        })
        .collect();
    (0..steps)
        .map(|_| {
            cur.iter_mut()
                .map(|row| {
                    *row = p.evolve(row);
                    0.5 * row.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `max_σ min{t ≥ 1 : ‖P^t(σ, ·) - μ‖_TV ≤ eps}` together with the curve
/// `t ↦ max_σ ‖P^t(σ, ·) - μ‖_TV` for `t = 1..=T`.
pub fn mixing_time_exact(p: &TransitionMatrix, mu: &[f64], eps: f64, max_steps: usize) -> Result<(usize, Vec<f64>)> {
    let n = p.dim();
    if !(eps > 0.0) {
        return Err(Error::invalid("mixing threshold must be positive"));
    }
    let mut cur: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut r = vec![0.0; n];
            r[s] = 1.0;
            r
        })
        .collect();
    let mut hit = vec![0usize; n];
    let mut curve = Vec::new();
    for t in 1..=max_steps {
        let mut worst = 0.0f64;
        for (s, row) in cur.iter_mut().enumerate() {
            *row = p.evolve(row);
            let tv = 0.5 * row.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum::<f64>();
            worst = worst.max(tv);
            if hit[s] == 0 && tv <= eps {
                hit[s] = t;
            }
        }
        curve.push(worst);
        if hit.iter().all(|&h| h > 0) {
            return Ok((*hit.iter().max().expect("non-empty"), curve));
        }
    }
    Err(Error::BudgetExhausted(max_steps as u64))
}

pub fn chain_diagnostics(m: &GibbsModel, eps: f64, max_steps: usize) -> Result<ChainDiagnostics> {
    let pm = m.pair_model();
    let dist = exact_from_pairs(&pm, TRANSITION_CAP)?;
    let p = transition_matrix(&pm)?;
    let relaxation_time = relaxation_time(&p, dist.probs())?;
    let (mixing_time, tv_curve) = mixing_time_exact(&p, dist.probs(), eps, max_steps)?;
    Ok(ChainDiagnostics { relaxation_time, mixing_time, tv_curve })
}

/// Sampled upper bound on the modified log-Sobolev constant.
#[derive(Clone, Debug)]
pub struct MlsiEstimate {
    /// Minimum of `ℰ(f, log f) / Ent(f)` over the sampled `f`.
    pub upper_bound: f64,
    pub ratios: Vec<f64>,
}

pub fn mlsi_ratio(p: &PairModel, dist: &ExactDistribution, f: &[f64]) -> Result<Option<f64>> {
    let ent = entropy_functional(dist, f)?;
    if ent <= 1e-300 {
        return Ok(None);
    }
    if f.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("mLSI ratio needs a strictly positive function"));
    }
    let logf: Vec<f64> = f.iter().map(|x| x.ln()).collect();
    Ok(Some(dirichlet_form(p, dist, f, &logf)? / ent))
}

/// Mixes exponential-tilt test functions and near-indicator spikes.
pub fn mlsi_ratio_estimate<R: Rng + ?Sized>(
    p: &PairModel,
    dist: &ExactDistribution,
    num_f: usize,
    rng: &mut R,
) -> Result<MlsiEstimate> {
    if p.n > TRANSITION_CAP {
        return Err(Error::TooLarge { n: p.n, cap: TRANSITION_CAP });
    }
    let size = 1usize << p.n;
    let mut ratios = Vec::with_capacity(num_f);
    for k in 0..num_f {
        let f: Vec<f64> = if k % 2 == 0 {
            let scale = 0.1 + 3.0 * rng.gen::<f64>();
            let a: Vec<f64> = (0..p.n).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }).collect();
            (0..size as u64)
                .map(|m| a.iter().enumerate().map(|(v, x)| x * spin(m, v)).sum::<f64>().exp())
                .collect()
        } else {
            let floor = 10f64.powf(-6.0 * rng.gen::<f64>());
            let target = rng.gen_range(0..size);
            (0..size).map(|m| if m == target { 1.0 + floor } else { floor }).collect()
        };
        if let Some(r) = mlsi_ratio(p, dist, &f)? {
            ratios.push(r);
        }
    }
    let upper_bound = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MlsiEstimate { upper_bound, ratios })
}

fn block_mask(block: &[usize]) -> u64 {
    block.iter().fold(0, |m, &v| m | 1 << v)
}

fn deposit(bits: u64, block: &[usize]) -> u64 {
    block.iter().enumerate().fold(0, |m, (i, &v)| if bits >> i & 1 == 1 { m | 1 << v } else { m })
}

fn check_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<()> {
    if blocks.is_empty() {
        return Err(Error::invalid("block list is empty"));
    }
    let mut covered = vec![false; n];
    for b in blocks {
        if b.is_empty() {
            return Err(Error::invalid("empty block"));
        }
        for &v in b {
            if v >= n {
                return Err(Error::invalid(format!("block vertex {v} out of range")));
            }
            covered[v] = true;
        }
    }
    if let Some(v) = covered.iter().position(|c| !c) {
        return Err(Error::invalid(format!("vertex {v} is in no block")));
    }
    Ok(())
}

/// Picks a block uniformly and resamples it from the conditional Gibbs law.
pub fn block_dynamics_matrix(dist: &ExactDistribution, blocks: &[Vec<usize>]) -> Result<TransitionMatrix> {
    let n = dist.n();
    if n > TRANSITION_CAP {
        return Err(Error::TooLarge { n, cap: TRANSITION_CAP });
    }
    check_blocks(n, blocks)?;
    let size = 1usize << n;
    let rate = 1.0 / blocks.len() as f64;
    let mut maps = vec![BTreeMap::new(); size];
    for (mask, row) in maps.iter_mut().enumerate() {
        for b in blocks {
            let outside = mask as u64 & !block_mask(b);
            let targets: Vec<u64> = (0..1u64 << b.len()).map(|c| outside | deposit(c, b)).collect();
            let total: f64 = targets.iter().map(|&t| dist.prob(t)).sum();
            if !(total > 0.0) {
                return Err(Error::Degenerate("block conditional has zero mass".into()));
            }
            for t in targets {
                *row.entry(t as usize).or_insert(0.0) += rate * dist.prob(t) / total;
            }
        }
    }
    Ok(TransitionMatrix::from_maps(maps))
}

/// Worst-case relaxation time of Glauber on `block` over all outside configurations.
pub fn local_relaxation_time(p: &PairModel, block: &[usize]) -> Result<f64> {
    let outside: Vec<usize> = (0..p.n).filter(|v| !block.contains(v)).collect();
    let mut worst = 0.0f64;
    for bits in 0..1u64 << outside.len() {
        let pin: Pinning = outside
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, if bits >> i & 1 == 1 { 1 } else { -1 }))
            .collect();
        let (local, _) = p.condition(&pin)?;
        let dist = exact_from_pairs(&local, TRANSITION_CAP)?;
        let chain = transition_matrix(&local)?;
        worst = worst.max(relaxation_time(&chain, dist.probs())?);
    }
    Ok(worst)
}

/// Both sides of the block-dynamics comparison inequality.
///
/// Discrete-time relaxation times count single updates. The continuous-time
/// values divide by the number of sites (or blocks) updated at unit rate.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub glauber: f64,
    pub block: f64,
    pub max_local: f64,
    pub max_multiplicity: usize,
    pub glauber_continuous: f64,
    pub block_continuous: f64,
    pub max_local_continuous: f64,
}

impl ComparisonReport {
    pub fn continuous_bound(&self) -> f64 {
        self.block_continuous * self.max_local_continuous * self.max_multiplicity as f64
    }

    pub fn discrete_bound(&self) -> f64 {
        self.block * self.max_local * self.max_multiplicity as f64
    }

    pub fn holds(&self) -> bool {
        self.glauber_continuous <= self.continuous_bound() * (1.0 + 1e-9)
    }
}

pub fn comparison_check(p: &PairModel, blocks: &[Vec<usize>]) -> Result<ComparisonReport> {
    check_blocks(p.n, blocks)?;
    let dist = exact_from_pairs(p, TRANSITION_CAP)?;
    let glauber = relaxation_time(&transition_matrix(p)?, dist.probs())?;
    let block = relaxation_time(&block_dynamics_matrix(&dist, blocks)?, dist.probs())?;
    let mut max_local = 0.0f64;
    let mut max_local_continuous = 0.0f64;
    for b in blocks {
        let t = local_relaxation_time(p, b)?;
        max_local = max_local.max(t);
        max_local_continuous = max_local_continuous.max(t / b.len() as f64);
    }
    let mut mult = vec![0usize; p.n];
    for b in blocks {
        for &v in b {
            mult[v] += 1;
        }
    }
    Ok(ComparisonReport {
        glauber,
        block,
        max_local,
        max_multiplicity: mult.into_iter().max().unwrap_or(0),
        glauber_continuous: glauber / p.n.max(1) as f64,
        block_continuous: block / blocks.len() as f64,
        max_local_continuous,
    })
}

/// Meeting frequency of two grand-coupled chains started from all-plus and
/// all-minus, recorded after each epoch of `steps_per_epoch` updates.
pub fn coupling_meet_estimate<R: Rng + ?Sized>(
    m: &GibbsModel,
    epochs: usize,
    steps_per_epoch: usize,
    replicas: usize,
    rng: &mut R,
) -> Vec<f64> {
    let hb = HeatBath::new(m);
    let n = m.n();
    let mut met = vec![0usize; epochs];
    for _ in 0..replicas {
        let mut x = vec![1i8; n];
        let mut y = vec![-1i8; n];
        let mut together = n == 0;
        for slot in met.iter_mut() {
            if !together {
                for _ in 0..steps_per_epoch {
                    let v = rng.gen_range(0..n);
                    let u = rng.gen::<f64>();
                    hb.update(&mut x, v, u);
                    hb.update(&mut y, v, u);
                }
                together = x == y;
            }
            if together {
                *slot += 1;
            }
        }
    }
    met.into_iter().map(|c| c as f64 / replicas.max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs_exact::exact_distribution;
    use crate::random_graph::{couplings_sample, sample_gnp, CouplingDist, CouplingMap, SparseGraph};
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn random_model(n: usize, seed: u64, beta: f64) -> GibbsModel {
        let mut r = stream_rng(seed, 0);
        let g = sample_gnp(n, 2.5, &mut r).unwrap();
        let c = couplings_sample(&g, CouplingDist::Gaussian, &mut r);
        let h = (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut r); 0.3 * z }).collect();
        GibbsModel::new(g, c, beta, h).unwrap()
    }

    fn path(n: usize, j: f64, beta: f64) -> GibbsModel {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = SparseGraph::from_edges(n, &edges).unwrap();
        let c = CouplingMap::constant(&g, j);
        GibbsModel::zero_field(g, c, beta).unwrap()
    }

    #[test]
    fn infinite_temperature_update_is_fair() {
        let m = path(3, 1.0, 0.0);
        let hb = HeatBath::new(&m);
        assert_eq!(hb.plus_probability(1, &[1, -1, 1]), 0.5);
    }

    #[test]
    fn saturated_field_forces_plus() {
        let g = SparseGraph::empty(1);
        let c = CouplingMap::new(&g, vec![]).unwrap();
        let m = GibbsModel::new(g, c, 1.0, vec![50.0]).unwrap();
        let hb = HeatBath::new(&m);
        assert!(1.0 - hb.plus_probability(0, &[-1]) < 1e-40);
    }

    #[test]
    fn single_site_transition_rows_equal_stationary() {
        let g = SparseGraph::empty(1);
        let c = CouplingMap::new(&g, vec![]).unwrap();
        let m = GibbsModel::new(g, c, 1.0, vec![0.4]).unwrap();
        let d = exact_distribution(&m, 20).unwrap();
        let p = transition_matrix(&m.pair_model()).unwrap().to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(p[(i, j)], d.probs()[j], epsilon = 1e-15);
            }
        }
        let pm = transition_matrix(&m.pair_model()).unwrap();
        assert_relative_eq!(relaxation_time(&pm, d.probs()).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(mixing_time_exact(&pm, d.probs(), 0.1, 10).unwrap().0, 1);
    }

    #[test]
    fn reversible_and_stationary() {
        let m = random_model(4, 3, 1.0);
        let d = exact_distribution(&m, 20).unwrap();
        let p = transition_matrix(&m.pair_model()).unwrap();
        assert!(p.row_sum_defect() <= 1e-12);
        assert!(p.detailed_balance_residual(d.probs()) <= 1e-12);
        assert!(p.stationarity_residual(d.probs()) <= 1e-12);
    }

    #[test]
    fn product_chain_relaxation() {
        // Two free sites at β = 0: eigenvalues 1, 1/2, 1/2, 0.
        let m = GibbsModel::zero_field(SparseGraph::empty(2), CouplingMap::new(&SparseGraph::empty(2), vec![]).unwrap(), 0.0).unwrap();
        let d = exact_distribution(&m, 20).unwrap();
        let p = transition_matrix(&m.pair_model()).unwrap();
        assert_relative_eq!(relaxation_time(&p, d.probs()).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn non_reversible_is_rejected() {
        let maps = vec![
            [(1usize, 1.0)].into_iter().collect::<BTreeMap<_, _>>(),
            [(2usize, 1.0)].into_iter().collect(),
            [(0usize, 1.0)].into_iter().collect(),
        ];
        let p = TransitionMatrix::from_maps(maps);
        let mu = [1.0 / 3.0; 3];
        assert!(p.stationarity_residual(&mu) < 1e-15);
        assert!(matches!(relaxation_time(&p, &mu), Err(Error::NonReversible(_))));
    }

    #[test]
    fn mixing_time_monotone_in_eps() {
        let m = random_model(5, 8, 0.8);
        let d = exact_distribution(&m, 20).unwrap();
        let p = transition_matrix(&m.pair_model()).unwrap();
        let (a, curve) = mixing_time_exact(&p, d.probs(), 0.25, 10_000).unwrap();
        let (b, _) = mixing_time_exact(&p, d.probs(), 0.125, 10_000).unwrap();
        assert!(a <= b);
        for w in curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn two_point_mlsi_matches_closed_form() {
        let g = SparseGraph::empty(1);
        let c = CouplingMap::new(&g, vec![]).unwrap();
        let m = GibbsModel::new(g, c, 1.0, vec![0.3]).unwrap();
        let d = exact_distribution(&m, 20).unwrap();
        let (qm, qp) = (d.probs()[0], d.probs()[1]);
        for f in [[1.0, 2.0], [0.1, 5.0], [3.0, 0.2]] {
            let ent = qm * f[0] * f[0].ln() + qp * f[1] * f[1].ln() - {
                let e = qm * f[0] + qp * f[1];
                e * e.ln()
            };
            let dir = qm * qp * (f[1] - f[0]) * (f[1].ln() - f[0].ln());
            let r = mlsi_ratio(&m.pair_model(), &d, &f).unwrap().unwrap();
            assert_relative_eq!(r, dir / ent, max_relative = 1e-12);
        }
        let est = mlsi_ratio_estimate(&m.pair_model(), &d, 20, &mut stream_rng(1, 1)).unwrap();
        assert!(est.ratios.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn singleton_blocks_reproduce_glauber() {
        let m = random_model(4, 5, 1.2);
        let d = exact_distribution(&m, 20).unwrap();
        let blocks: Vec<Vec<usize>> = (0..4).map(|v| vec![v]).collect();
        let a = block_dynamics_matrix(&d, &blocks).unwrap().to_dense();
        let b = transition_matrix(&m.pair_model()).unwrap().to_dense();
        assert!((a - b).amax() <= 1e-12);
    }

    #[test]
    fn whole_block_resamples_stationary() {
        let m = random_model(4, 6, 1.0);
        let d = exact_distribution(&m, 20).unwrap();
        let p = block_dynamics_matrix(&d, &[vec![0, 1, 2, 3]]).unwrap();
        let dense = p.to_dense();
        for i in 0..16 {
            for j in 0..16 {
                assert_relative_eq!(dense[(i, j)], d.probs()[j], epsilon = 1e-12);
            }
        }
        assert_relative_eq!(relaxation_time(&p, d.probs()).unwrap(), 1.0, epsilon = 1e-9);
        assert!(block_dynamics_matrix(&d, &[]).is_err());
    }

    #[test]
    fn path_halves_satisfy_comparison() {
        let m = path(6, 1.0, 0.7);
        let r = comparison_check(&m.pair_model(), &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert_eq!(r.max_multiplicity, 1);
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn coupling_meets_and_is_monotone() {
        let g = SparseGraph::from_edges(2, &[(0, 1)]).unwrap();
        let m = GibbsModel::zero_field(g.clone(), CouplingMap::constant(&g, 1.0), 2.0).unwrap();
        let curve = coupling_meet_estimate(&m, 30, 2, 400, &mut stream_rng(2, 0));
        assert!(*curve.last().unwrap() > 0.0);
        for w in curve.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}
