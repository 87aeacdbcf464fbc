//! Critical inverse temperatures from the Gaussian `tanh²` integral and
//! Monte-Carlo harnesses for the concentration bounds.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::Serialize;

use crate::gibbs_exact::GibbsModel;
use crate::random_graph::{couplings_sample, sample_gnp, CouplingDist, SparseGraph};
use crate::rng::{map_replicas, stream_rng, SimRng};
use crate::weights::upsilon_weight;
use crate::{Error, Result};

/// Default Gauss–Hermite order.
pub const DEFAULT_ORDER: usize = 64;
/// `κ` in the definition of the critical temperature.
pub const KAPPA_C: f64 = 0.25;
/// Monte-Carlo samples drawn per random stream.
const CHUNK: usize = 1000;

/// Gauss–Hermite rule for `∫ f(x) φ(x) dx` with `φ` the standard normal
/// density.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Golub–Welsch on the Jacobi matrix of the probabilists' Hermite
    /// polynomials.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("quadrature order must be positive"));
        }
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> =
            (0..order).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::Numerical("quadrature weights degenerate".into()));
        }
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Above this `β` the Hermite rule loses accuracy and a composite
/// Gauss–Legendre rule on `[0, 40]` is used instead.
pub const HERMITE_BETA_LIMIT: f64 = 0.5;

/// `d · E[tanh²(β γ)]` for standard Gaussian `γ`.
pub fn kappa_integral(beta: f64, d: f64, rule: &QuadratureRule) -> f64 {
    if beta.abs() <= HERMITE_BETA_LIMIT {
        d * rule.integrate(|x| (beta * x).tanh().powi(2))
    } else {
        d * tanh_sq_composite(beta.abs(), 0.25 / beta.abs())
    }
}

fn tanh_sq_composite(beta: f64, panel: f64) -> f64 {
    const NODES: [f64; 8] = [
        -0.960_289_856_497_536_2,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const WEIGHTS: [f64; 8] = [
        0.101_228_536_290_376_26,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362,
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_26,
    ];
    let panels = (40.0 / panel).ceil() as usize;
    let h = 40.0 / panels as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        let part: f64 = NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&t, w)| {
                let x = mid + 0.5 * h * t;
                w * (beta * x).tanh().powi(2) * (-0.5 * x * x).exp()
            })
            .sum();
        total += 0.5 * h * part;
    }
    2.0 * total / norm
}

/// Root of `kappa_integral(β, d) = target` by bracketing and bisection.
pub fn solve_beta(d: f64, target: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(target > 0.0) || !(d > target) || !d.is_finite() {
        return Err(Error::invalid(format!("no root: need 0 < target {target} < d {d}")));
    }
    let f = |b: f64| kappa_integral(b, d, rule) - target;
    let mut hi = 5.0 / d.sqrt() * target.max(1.0);
    let mut lo = 0.0;
    let mut grow = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Numerical(format!("no sign change for d={d}, target={target}")));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `β` with `d E[tanh²(βγ)] = κ`.
pub fn beta_c(d: f64, kappa: f64) -> Result<f64> {
    solve_beta(d, kappa, &QuadratureRule::gauss_hermite(DEFAULT_ORDER)?)
}

/// `β` with `d E[tanh²(βγ)] = 1`.
pub fn beta_rec(d: f64) -> Result<f64> {
    solve_beta(d, 1.0, &QuadratureRule::gauss_hermite(DEFAULT_ORDER)?)
}

/// Empirical exceedance frequency next to the theoretical bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub harness: String,
    pub params: String,
    pub samples: usize,
    pub empirical: f64,
    pub bound: f64,
    pub mc_sigma: f64,
}

impl TailReport {
    fn from_hits(harness: &str, params: String, hits: usize, samples: usize, bound: f64) -> Self {
        let p = hits as f64 / samples.max(1) as f64;
        Self {
            harness: harness.into(),
            params,
            samples,
            empirical: p,
            bound,
            mc_sigma: (p * (1.0 - p) / samples.max(1) as f64).sqrt(),
        }
    }

    /// `empirical ≤ bound + 3σ`.
    pub fn within_bound(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.mc_sigma
    }
}

/// Counts successes of `trial` over `samples` draws split across streams.
fn count_hits(samples: usize, seed: u64, threads: usize, trial: impl Fn(&mut SimRng) -> bool + Sync + Send) -> Result<usize> {
    let chunks = samples.div_ceil(CHUNK);
    let counts = map_replicas(chunks, threads, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let todo = CHUNK.min(samples - c * CHUNK);
        (0..todo).filter(|_| trial(&mut rng)).count()
    })?;
    Ok(counts.into_iter().sum())
}

/// `2 exp(-δ² d / (8 + 2δ))`.
pub fn theta_tail_bound(d: f64, delta: f64) -> f64 {
    2.0 * (-delta * delta * d / (8.0 + 2.0 * delta)).exp()
}

/// Graph size used to draw vertex degrees.
pub const THETA_PROXY_N: u64 = 100_000;

/// `Θ(u)` for a vertex with `Binomial(N-1, d/N)` neighbours and Gaussian
/// couplings, against `E Θ + δ/2`.
pub fn theta_tail_harness(d: f64, beta: f64, delta: f64, samples: usize, seed: u64, threads: usize) -> Result<TailReport> {
    if !(d > 0.0) || d >= THETA_PROXY_N as f64 || !(beta >= 0.0) || !(delta >= 0.0) {
        return Err(Error::invalid("theta harness needs 0 < d < N, beta ≥ 0, delta ≥ 0"));
    }
    let rule = QuadratureRule::gauss_hermite(DEFAULT_ORDER)?;
    let n = THETA_PROXY_N;
    let p = d / n as f64;
    let mean = (n - 1) as f64 * p * kappa_integral(beta, 1.0, &rule);
    let degree = Binomial::new(n - 1, p).map_err(|e| Error::invalid(e.to_string()))?;
    let level = mean + delta / 2.0;
    let hits = count_hits(samples, seed, threads, |rng| {
        let k = degree.sample(rng);
        let theta: f64 = (0..k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                (beta * z).tanh().powi(2)
            })
            .sum();
        theta >= level
    })?;
    Ok(TailReport::from_hits(
        "theta",
        format!("d={d};beta={beta};delta={delta}"),
        hits,
        samples,
        theta_tail_bound(d, delta),
    ))
}

/// `SQR(v, r)` of a fresh `Poisson(d)` Galton–Watson tree with Gaussian
/// couplings, generated depth-first without storing the tree.
pub fn gw_sqr_sample<R: Rng + ?Sized>(offspring: &Poisson<f64>, beta: f64, depth: usize, rng: &mut R) -> f64 {
    if depth == 0 {
        return 1.0;
    }
    let k = offspring.sample(rng) as u64;
    let mut total = 0.0;
    for _ in 0..k {
        let z: f64 = StandardNormal.sample(rng);
        let g2 = (beta * z).tanh().powi(2);
        total += if depth == 1 { g2 } else { g2 * gw_sqr_sample(offspring, beta, depth - 1, rng) };
    }
    total
}

/// Decides `SQR(v, r) > level` for a fresh tree with the same law as
/// [`gw_sqr_sample`].
///
/// The last two generations below each node `v` at depth `r - 2` are drawn
/// coarse first: the child count `K`, the child couplings in polar form
/// `γ = R u` with `R² ~ χ²_K`, the grandchild count `M ~ Poisson(K d)` and
/// the grandchild squared-coupling total `T ~ χ²_M`. With `tanh²(x) ≤ x²`
/// this bounds the contribution of `v` by `W_v β⁴ R² T`. Only when the
/// bound reaches `level` are the finer variables drawn from their exact
/// conditional laws (uniform directions, multinomial split of `M`,
/// Dirichlet split of `T`).
pub fn gw_sqr_exceeds<R: Rng + ?Sized>(d: f64, beta: f64, depth: usize, level: f64, rng: &mut R) -> bool {
    let offspring = &Poisson::new(d).expect("positive mean");
    if depth < 2 {
        return gw_sqr_sample(offspring, beta, depth, rng) > level;
    }
    let b2 = beta * beta;
    let mut frontier = vec![1.0f64];
    for _ in 2..depth {
        let mut next = Vec::new();
        for &w in &frontier {
            let k = offspring.sample(rng) as u64;
            for _ in 0..k {
                let z: f64 = StandardNormal.sample(rng);
                next.push(w * (beta * z).tanh().powi(2));
            }
        }
        frontier = next;
    }

    struct Coarse {
        w: f64,
        k: u64,
        r2: f64,
        m: u64,
        t: f64,
    }
    let mut coarse = Vec::with_capacity(frontier.len());
    let mut upper = 0.0;
    for &w in &frontier {
        let k = offspring.sample(rng) as u64;
        let r2 = chi_square(k, rng);
        let m = if k == 0 { 0 } else { Poisson::new(k as f64 * d).expect("positive mean").sample(rng) as u64 };
        let t = chi_square(m, rng);
        upper += w * b2 * b2 * r2 * t;
        coarse.push(Coarse { w, k, r2, m, t });
    }
    if upper <= level {
        return false;
    }

    // children: weight to the child, grandchild count and squared total
    let mut fine: Vec<(f64, u64, f64)> = Vec::new();
    let mut upper = 0.0;
    for c in &coarse {
        if c.k == 0 {
            continue;
        }
        let dir = sphere_point(c.k as usize, rng);
        let counts = multinomial_even(c.m, c.k as usize, rng);
        let shares = dirichlet_shares(&counts, rng);
        for ((u, &cnt), share) in dir.iter().zip(&counts).zip(shares) {
            let wc = c.w * (beta * c.r2.sqrt() * u).tanh().powi(2);
            let tc = c.t * share;
            upper += wc * b2 * tc;
            fine.push((wc, cnt, tc));
        }
    }
    if upper <= level {
        return false;
    }

    let mut total = 0.0;
    for (wc, cnt, tc) in fine {
        if cnt == 0 {
            continue;
        }
        let r = tc.sqrt();
        total += wc * sphere_point(cnt as usize, rng).iter().map(|&u| (beta * r * u).tanh().powi(2)).sum::<f64>();
    }
    total > level
}

fn chi_square<R: Rng + ?Sized>(dof: u64, rng: &mut R) -> f64 {
    if dof == 0 {
        0.0
    } else {
        Gamma::new(dof as f64 / 2.0, 2.0).expect("positive shape").sample(rng)
    }
}

/// Uniform point on the unit sphere in `dim` dimensions.
fn sphere_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `total` balls thrown uniformly into `bins` bins.
fn multinomial_even<R: Rng + ?Sized>(total: u64, bins: usize, rng: &mut R) -> Vec<u64> {
    let mut left = total;
    let mut out = Vec::with_capacity(bins);
    for i in 0..bins {
        let rest = (bins - i) as f64;
        let x = if i + 1 == bins || left == 0 {
            left
        } else {
            Binomial::new(left, 1.0 / rest).expect("valid probability").sample(rng)
        };
        out.push(x);
        left -= x;
    }
    out
}

/// Fractions of a `χ²` total carried by independent `χ²_{k_i}` parts.
fn dirichlet_shares<R: Rng + ?Sized>(dofs: &[u64], rng: &mut R) -> Vec<f64> {
    let parts: Vec<f64> = dofs.iter().map(|&k| chi_square(k, rng)).collect();
    let sum: f64 = parts.iter().sum();
    if sum == 0.0 {
        return vec![0.0; dofs.len()];
    }
    parts.into_iter().map(|x| x / sum).collect()
}

/// Exceedance of `SQR(v, r) > C κ^r` on Galton–Watson trees against
/// `exp((1 - C) t)`.
#[allow(clippy::too_many_arguments)]
pub fn gw_sqr_tail_harness(
    d: f64,
    beta: f64,
    kappa: f64,
    depth: usize,
    c: f64,
    t: f64,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<TailReport> {
    if !(t >= 0.0 && t < d / (2.0 * kappa)) {
        return Err(Error::invalid(format!("t={t} outside [0, d/(2κ))")));
    }
    if !(d > 0.0) {
        return Err(Error::invalid(format!("offspring mean {d} must be positive")));
    }
    let level = c * kappa.powi(depth as i32);
    let hits = count_hits(samples, seed, threads, |rng| gw_sqr_exceeds(d, beta, depth, level, rng))?;
    Ok(TailReport::from_hits(
        "gw_sqr",
        format!("d={d};beta={beta};r={depth};C={c};t={t}"),
        hits,
        samples,
        ((1.0 - c) * t).exp(),
    ))
}

/// `exp(-N δ² / π)`.
pub fn half_normal_bound(count: usize, delta: f64) -> f64 {
    (-(count as f64) * delta * delta / std::f64::consts::PI).exp()
}

/// `E Σ|X_i| = N σ √(2/π)`.
pub fn half_normal_mean(count: usize, sigma: f64) -> f64 {
    count as f64 * sigma * (2.0 / std::f64::consts::PI).sqrt()
}

/// Sum of `N` half-normals against `(1 + δ)` times its mean.
pub fn half_normal_tail_harness(
    count: usize,
    sigma: f64,
    delta: f64,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<TailReport> {
    if count == 0 || !(sigma > 0.0) || !(delta >= 0.0) {
        return Err(Error::invalid("half-normal harness needs N ≥ 1, sigma > 0, delta ≥ 0"));
    }
    let level = (1.0 + delta) * half_normal_mean(count, sigma);
    let hits = count_hits(samples, seed, threads, |rng| half_normal_sum(count, sigma, rng) > level)?;
    Ok(TailReport::from_hits(
        "half_normal",
        format!("N={count};sigma={sigma};delta={delta}"),
        hits,
        samples,
        half_normal_bound(count, delta),
    ))
}

pub fn half_normal_sum<R: Rng + ?Sized>(count: usize, sigma: f64, rng: &mut R) -> f64 {
    (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            (sigma * z).abs()
        })
        .sum()
}

/// Sample mean of `Σ|X_i|` and its standard error.
pub fn half_normal_mean_estimate(count: usize, sigma: f64, samples: usize, seed: u64, threads: usize) -> Result<(f64, f64)> {
    let chunks = samples.div_ceil(CHUNK);
    let parts = map_replicas(chunks, threads, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let todo = CHUNK.min(samples - c * CHUNK);
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..todo {
            let x = half_normal_sum(count, sigma, &mut rng);
            s += x;
            s2 += x * x;
        }
        (s, s2)
    })?;
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
    Ok((mean, (var / m).sqrt()))
}

/// `2 d^{-1/100} log n`.
pub fn upsilon_threshold(n: usize, d: f64) -> f64 {
    2.0 * d.powf(-0.01) * (n as f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpsilonReport {
    pub paths: usize,
    pub exceedances: usize,
    pub threshold: f64,
    pub max_upsilon: f64,
}

impl UpsilonReport {
    pub fn fraction(&self) -> f64 {
        self.exceedances as f64 / self.paths.max(1) as f64
    }
}

/// Random self-avoiding walks of `path_len` vertices in fresh `G(n, d/n)`
/// instances, one instance per stream; walks stuck early are redrawn.
pub fn upsilon_path_harness(
    n: usize,
    d: f64,
    beta: f64,
    path_len: usize,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<UpsilonReport> {
    if path_len == 0 {
        return Err(Error::invalid("path length must be positive"));
    }
    let threshold = upsilon_threshold(n, d);
    let chunks = samples.div_ceil(CHUNK);
    let parts = map_replicas(chunks, threads, |c| -> Result<(usize, usize, f64)> {
        let mut rng = stream_rng(seed, c as u64);
        let g = sample_gnp(n, d, &mut rng)?;
        let cp = couplings_sample(&g, CouplingDist::Gaussian, &mut rng);
        let model = GibbsModel::zero_field(g, cp, beta)?;
        let todo = CHUNK.min(samples - c * CHUNK);
        let (mut done, mut over, mut worst) = (0, 0, f64::NEG_INFINITY);
        let mut attempts = 0usize;
        while done < todo {
            attempts += 1;
            if attempts > 1000 * todo + 1000 {
                return Err(Error::Degenerate("too few walks of the requested length".into()));
            }
            let Some(path) = random_walk_path(model.graph(), path_len, &mut rng) else { continue };
            let u = upsilon_weight(&model, &path)?;
            done += 1;
            worst = worst.max(u);
            if u > threshold {
                over += 1;
            }
        }
        Ok((done, over, worst))
    })?;
    let mut report = UpsilonReport { paths: 0, exceedances: 0, threshold, max_upsilon: f64::NEG_INFINITY };
    for part in parts {
        let (done, over, worst) = part?;
        report.paths += done;
        report.exceedances += over;
        report.max_upsilon = report.max_upsilon.max(worst);
    }
    Ok(report)
}

fn random_walk_path<R: Rng + ?Sized>(g: &SparseGraph, len: usize, rng: &mut R) -> Option<Vec<usize>> {
    let start = rng.gen_range(0..g.n());
    if g.degree(start) == 0 {
        return None;
    }
    let mut path = vec![start];
    while path.len() < len {
        let v = *path.last().unwrap();
        let fresh: Vec<usize> = g.neighbors(v).filter(|x| !path.contains(x)).collect();
        if fresh.is_empty() {
            return None;
        }
        path.push(fresh[rng.gen_range(0..fresh.len())]);
    }
    Some(path)
}

/// A connected vertex set spanning more edges than vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityWitness {
    pub vertices: Vec<usize>,
    pub edges: usize,
}

/// Searches for a connected set of at most `size_cap` vertices spanning
/// more edges than vertices. Every witness returned is genuine; the search
/// unions root paths of a breadth-first tree to the endpoints of two
/// non-tree edges and keeps the smallest such set.
pub fn small_set_density_check(g: &SparseGraph, size_cap: usize) -> Option<DensityWitness> {
    let mut best: Option<DensityWitness> = None;
    let radius = size_cap.saturating_sub(1);
    for v in 0..g.n() {
        let ball = g.ball(v, radius);
        if ball.len() < 3 {
            continue;
        }
        let mut allowed = vec![false; g.n()];
        for &x in &ball {
            allowed[x] = true;
        }
        let bfs = g.bfs_restricted(&[v], |x| allowed[x]);
        let extra: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| allowed[a] && allowed[b] && bfs.parent[a] != b && bfs.parent[b] != a)
            .collect();
        for i in 0..extra.len() {
            for j in i + 1..extra.len() {
                let mut set = std::collections::BTreeSet::new();
                for x in [extra[i].0, extra[i].1, extra[j].0, extra[j].1] {
                    set.extend(bfs.path_to(x).unwrap_or_default());
                }
                if set.len() > size_cap || best.as_ref().is_some_and(|b| b.vertices.len() <= set.len()) {
                    continue;
                }
                let mut member = vec![false; g.n()];
                for &x in &set {
                    member[x] = true;
                }
                let edges = g.edges_within(&member);
                if edges > set.len() {
                    best = Some(DensityWitness { vertices: set.into_iter().collect(), edges });
                }
            }
        }
    }
    best
}

/// Exhaustive version over all connected sets of at most `size_cap`
/// vertices; returns the smallest witness. Exponential, for small graphs.
pub fn small_set_density_exhaustive(g: &SparseGraph, size_cap: usize) -> Option<DensityWitness> {
    let mut best: Option<DensityWitness> = None;
    for v in 0..g.n() {
        let mut set = vec![v];
        let frontier: Vec<usize> = g.neighbors(v).filter(|&x| x > v).collect();
        extend_sets(g, v, size_cap, &mut set, frontier, &mut best);
    }
    best
}

// Each connected set is generated once, rooted at its minimum vertex.
fn extend_sets(
    g: &SparseGraph,
    root: usize,
    cap: usize,
    set: &mut Vec<usize>,
    mut frontier: Vec<usize>,
    best: &mut Option<DensityWitness>,
) {
    let mut member = vec![false; g.n()];
    for &x in set.iter() {
        member[x] = true;
    }
    let edges = g.edges_within(&member);
    if edges > set.len() && best.as_ref().map_or(true, |b| b.vertices.len() > set.len()) {
        let mut vs = set.clone();
        vs.sort_unstable();
        *best = Some(DensityWitness { vertices: vs, edges });
    }
    if set.len() >= cap {
        return;
    }
    while let Some(w) = frontier.pop() {
        let mut next = frontier.clone();
        for x in g.neighbors(w) {
            if x > root && !member[x] && !next.contains(&x) && !set.iter().any(|&s| g.has_edge(s, x) && s != w) {
                next.push(x);
            }
        }
        set.push(w);
        extend_sets(g, root, cap, set, next, best);
        set.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_is_exact_on_moments() {
        let rule = QuadratureRule::gauss_hermite(64).unwrap();
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let double_factorial = |k: u32| (1..k).step_by(2).map(|x| x as f64).product::<f64>();
        for k in [0u32, 2, 4, 8, 16] {
            let m = rule.integrate(|x| x.powi(k as i32));
            assert_relative_eq!(m, double_factorial(k), max_relative = 1e-10);
        }
        assert!(rule.integrate(|x| x.powi(7)).abs() < 1e-10);
    }

    #[test]
    fn kappa_limits() {
        let rule = QuadratureRule::gauss_hermite(64).unwrap();
        assert_eq!(kappa_integral(0.0, 5.0, &rule), 0.0);
        assert!((kappa_integral(100.0, 1.0, &rule) - 1.0).abs() < 0.02);
        let fine = QuadratureRule::gauss_hermite(128).unwrap();
        for b in [0.01, 0.1, 0.3, 0.5] {
            assert_relative_eq!(kappa_integral(b, 25.0, &rule), kappa_integral(b, 25.0, &fine), max_relative = 1e-11);
        }
        let wide = QuadratureRule::gauss_hermite(256).unwrap();
        let reference = 25.0 * wide.integrate(|x| x.tanh().powi(2));
        assert_relative_eq!(kappa_integral(1.0, 25.0, &rule), reference, max_relative = 1e-11);
        for b in [0.6, 2.0, 5.0] {
            assert_relative_eq!(kappa_integral(b, 1.0, &rule), tanh_sq_composite(b, 0.05 / b), max_relative = 1e-11);
        }
    }

    #[test]
    fn critical_temperatures() {
        let rule = QuadratureRule::gauss_hermite(64).unwrap();
        let b = beta_c(100.0, KAPPA_C).unwrap();
        assert!((kappa_integral(b, 100.0, &rule) - KAPPA_C).abs() < 1e-9);
        assert!((b * 10.0 - 0.5).abs() < 0.025, "{b}");
        assert!(beta_c(4.0, 1e-8).unwrap() < 1e-3);
        let r = beta_rec(1e4).unwrap();
        assert!((0.99..=1.01).contains(&(r * 100.0)), "{r}");
        let mut prev = f64::INFINITY;
        for d in [16.0, 32.0, 64.0, 128.0] {
            let bc = beta_c(d, KAPPA_C).unwrap();
            assert!(bc < prev);
            assert!(beta_rec(d).unwrap() > bc);
            prev = bc;
        }
        let two = beta_rec(2.0).unwrap();
        assert!(two.is_finite() && two > 0.0);
        assert!(beta_rec(1.0).is_err());
    }

    #[test]
    fn bounds_arithmetic() {
        assert_relative_eq!(theta_tail_bound(20.0, 1.0), 2.0 * (-2.0f64).exp(), max_relative = 1e-15);
        assert_eq!(half_normal_bound(10, 0.0), 1.0);
        assert_relative_eq!(upsilon_threshold(5000, 20.0), 2.0 * 20f64.powf(-0.01) * 5000f64.ln());
    }

    #[test]
    fn zero_temperature_theta_never_exceeds() {
        let r = theta_tail_harness(10.0, 0.0, 0.5, 2000, 3, 1).unwrap();
        assert_eq!(r.empirical, 0.0);
        assert!(r.within_bound());
    }

    #[test]
    fn harness_is_thread_independent() {
        let a = half_normal_tail_harness(20, 1.0, 0.1, 3500, 9, 1).unwrap();
        let b = half_normal_tail_harness(20, 1.0, 0.1, 3500, 9, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_witnesses() {
        let tree = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        assert!(small_set_density_check(&tree, 5).is_none());
        assert!(small_set_density_exhaustive(&tree, 5).is_none());
        let k4 = SparseGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let w = small_set_density_exhaustive(&k4, 4).unwrap();
        assert_eq!(w.vertices.len(), 4);
        assert_eq!(w.edges, 6);
        assert_eq!(small_set_density_check(&k4, 4).unwrap().vertices.len(), 4);
    }

    #[test]
    fn gw_sqr_mean_and_lazy_agreement() {
        let d = 3.0;
        let beta = beta_c(d, KAPPA_C).unwrap();
        let off = Poisson::new(d).unwrap();
        let mut rng = stream_rng(4, 0);
        let xs: Vec<f64> = (0..40_000).map(|_| gw_sqr_sample(&off, beta, 2, &mut rng)).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!((m - KAPPA_C.powi(2)).abs() < 4.0 * sd / (xs.len() as f64).sqrt(), "{m}");
        let n = 40_000;
        for (depth, mult) in [(2usize, 0.5), (2, 3.0), (3, 0.5), (3, 4.0)] {
            let level = mult * KAPPA_C.powi(depth as i32);
            let mut rng = stream_rng(6, depth as u64);
            let plain = (0..n).filter(|_| gw_sqr_sample(&off, beta, depth, &mut rng) > level).count() as f64 / n as f64;
            let mut rng = stream_rng(5, depth as u64);
            let lazy = (0..n).filter(|_| gw_sqr_exceeds(d, beta, depth, level, &mut rng)).count() as f64 / n as f64;
            let se = (plain * (1.0 - plain) / n as f64).sqrt() * 2f64.sqrt();
            assert!((plain - lazy).abs() < 4.0 * se + 1e-12, "depth {depth} level {level}: {plain} {lazy}");
        }
    }

    #[test]
    fn gw_sqr_zero_depth() {
        let off = Poisson::new(3.0).unwrap();
        let mut rng = stream_rng(1, 0);
        assert_eq!(gw_sqr_sample(&off, 0.3, 0, &mut rng), 1.0);
    }
}
