//! Edge influences, aggregate squared influence, vertex and path weights,
//! the comparison weight Υ and weighted sphere sums.

use crate::gibbs_exact::GibbsModel;
use crate::walk_trees::WalkTree;
use crate::{Error, Result};

/// Default cap on path extensions for exhaustive walk enumeration.
pub const DEFAULT_PATH_BUDGET: u64 = 10_000_000;

/// Per-edge and per-vertex weights of a model at accuracy `epsilon`
/// and degree parameter `d`.
#[derive(Clone, Debug)]
pub struct WeightContext<'a> {
    model: &'a GibbsModel,
    epsilon: f64,
    d: f64,
    gamma: Vec<f64>,
    theta: Vec<f64>,
    weight: Vec<f64>,
    pub budget: u64,
}

impl<'a> WeightContext<'a> {
    pub fn new(model: &'a GibbsModel, epsilon: f64, d: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon {epsilon} must lie in (0, 1)")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid(format!("degree parameter {d} must be positive")));
        }
        let g = model.graph();
        let gamma: Vec<f64> = model.couplings().values().iter().map(|&j| (model.beta() * j).tanh().abs()).collect();
        let theta: Vec<f64> = (0..g.n())
            .map(|u| g.incident(u).iter().map(|&(_, e)| gamma[e] * gamma[e]).sum())
            .collect();
        let weight = theta.iter().map(|&t| light_or_heavy(t, epsilon, d)).collect();
        Ok(Self { model, epsilon, d, gamma, theta, weight, budget: DEFAULT_PATH_BUDGET })
    }

    pub fn model(&self) -> &GibbsModel {
        self.model
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `Γ_e = |tanh(β J_e)|`.
    pub fn edge_influence(&self, e: usize) -> f64 {
        self.gamma[e]
    }

    pub fn edge_influences(&self) -> &[f64] {
        &self.gamma
    }

    /// `Θ(u) = Σ_{z ∼ u} Γ_{uz}²`.
    pub fn aggregate_theta(&self, u: usize) -> f64 {
        self.theta[u]
    }

    /// `1 - ε/4` when `Θ(u) ≤ 1 - ε/2`, otherwise `d Θ(u)`.
    pub fn vertex_weight(&self, u: usize) -> f64 {
        self.weight[u]
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn is_light(&self, u: usize) -> bool {
        self.theta[u] <= 1.0 - self.epsilon / 2.0
    }

    /// Product of vertex weights along a self-avoiding walk.
    pub fn path_weight(&self, path: &[usize]) -> Result<f64> {
        check_path(self.model, path)?;
        Ok(path.iter().map(|&v| self.weight[v]).product())
    }

    pub fn upsilon(&self, path: &[usize]) -> Result<f64> {
        upsilon_weight(self.model, path)
    }

    /// Sum over self-avoiding walks of length `ell` from `v` of `Π Γ_e²`.
    pub fn sqr_sphere(&self, v: usize, ell: usize) -> Result<f64> {
        let g = self.model.graph();
        if v >= g.n() {
            return Err(Error::invalid(format!("vertex {v} out of range")));
        }
        let mut on_path = vec![false; g.n()];
        on_path[v] = true;
        let mut spent = 0u64;
        self.sqr_dfs(v, ell, &mut on_path, &mut spent)
    }

    fn sqr_dfs(&self, v: usize, left: usize, on_path: &mut [bool], spent: &mut u64) -> Result<f64> {
        if left == 0 {
            return Ok(1.0);
        }
        let g = self.model.graph();
        let mut total = 0.0;
        for &(w, e) in g.incident(v) {
            if on_path[w] || self.gamma[e] == 0.0 {
                continue;
            }
            *spent += 1;
            if *spent > self.budget {
                return Err(Error::BudgetExhausted(self.budget));
            }
            on_path[w] = true;
            total += self.gamma[e] * self.gamma[e] * self.sqr_dfs(w, left - 1, on_path, spent)?;
            on_path[w] = false;
        }
        Ok(total)
    }
}

fn light_or_heavy(theta: f64, epsilon: f64, d: f64) -> f64 {
    if theta <= 1.0 - epsilon / 2.0 {
        1.0 - epsilon / 4.0
    } else {
        d * theta
    }
}

fn check_path(model: &GibbsModel, path: &[usize]) -> Result<()> {
    let g = model.graph();
    let mut seen = vec![false; g.n()];
    for (i, &v) in path.iter().enumerate() {
        if v >= g.n() {
            return Err(Error::invalid(format!("path vertex {v} out of range")));
        }
        if seen[v] {
            return Err(Error::invalid(format!("path revisits vertex {v}")));
        }
        seen[v] = true;
        if i > 0 && !g.has_edge(path[i - 1], v) {
            return Err(Error::invalid(format!("path step {} -> {v} is not an edge", path[i - 1])));
        }
    }
    Ok(())
}

/// `Υ_β(P) = β Σ_{e touching P} |J_e| + Σ_{v ∈ P} log deg(v)`.
pub fn upsilon_weight(model: &GibbsModel, path: &[usize]) -> Result<f64> {
    check_path(model, path)?;
    let g = model.graph();
    let mut on = vec![false; g.n()];
    for &v in path {
        if g.degree(v) == 0 {
            return Err(Error::invalid(format!("vertex {v} has degree zero")));
        }
        on[v] = true;
    }
    let touching: f64 = g
        .edges()
        .iter()
        .zip(model.couplings().values())
        .filter(|(&(u, v), _)| on[u] || on[v])
        .map(|(_, j)| j.abs())
        .sum();
    let logs: f64 = path.iter().map(|&v| (g.degree(v) as f64).ln()).sum();
    Ok(model.beta() * touching + logs)
}

/// SQR restricted to tree paths of length `ell` from the root that end at a
/// node whose original vertex is flagged in `targets`. `node_gamma[z]` is the
/// influence of the edge from node `z` to its parent.
pub fn sqr_boundary(tree: &WalkTree, node_gamma: &[f64], targets: &[bool], ell: usize) -> f64 {
    let mut total = 0.0;
    let mut stack = vec![(tree.root(), 0usize, 1.0f64)];
    while let Some((z, depth, w)) = stack.pop() {
        if depth == ell {
            if targets[tree.node(z).copy_of] {
                total += w;
            }
            continue;
        }
        for &c in &tree.node(z).children {
            let g = node_gamma[c];
            stack.push((c, depth + 1, w * g * g));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_graph::{CouplingMap, SparseGraph};
    use approx::assert_relative_eq;

    fn model(n: usize, edges: &[(usize, usize)], j: f64, beta: f64) -> GibbsModel {
        let g = SparseGraph::from_edges(n, edges).unwrap();
        let c = CouplingMap::constant(&g, j);
        GibbsModel::zero_field(g, c, beta).unwrap()
    }

    #[test]
    fn influence_values() {
        let m = model(2, &[(0, 1)], 0.8, 0.5);
        let ctx = WeightContext::new(&m, 0.2, 3.0).unwrap();
        assert_relative_eq!(ctx.edge_influence(0), 0.379_948_962_255_224_9, epsilon = 1e-15);
        let big = model(2, &[(0, 1)], 1e6, 1.0);
        let ctx = WeightContext::new(&big, 0.2, 3.0).unwrap();
        assert!(ctx.edge_influence(0) > 1.0 - 1e-12 && ctx.edge_influence(0) <= 1.0);
        let cold = model(2, &[(0, 1)], 3.0, 0.0);
        assert_eq!(WeightContext::new(&cold, 0.2, 3.0).unwrap().edge_influence(0), 0.0);
    }

    #[test]
    fn theta_on_star() {
        let j = 0.5f64.atanh();
        let m = model(4, &[(0, 1), (0, 2), (0, 3)], j, 1.0);
        let ctx = WeightContext::new(&m, 0.2, 3.0).unwrap();
        assert_relative_eq!(ctx.aggregate_theta(0), 0.75, epsilon = 1e-15);
        let iso = model(1, &[], 1.0, 1.0);
        assert_eq!(WeightContext::new(&iso, 0.2, 3.0).unwrap().aggregate_theta(0), 0.0);
    }

    #[test]
    fn weight_branches() {
        assert_eq!(light_or_heavy(0.0, 0.2, 10.0), 0.95);
        assert_relative_eq!(light_or_heavy(0.95, 0.2, 10.0), 9.5, epsilon = 1e-14);
        assert_eq!(light_or_heavy(0.9, 0.2, 10.0), 0.95);
    }

    #[test]
    fn path_weights() {
        let m = model(3, &[(0, 1), (1, 2)], 0.1, 0.1);
        let ctx = WeightContext::new(&m, 0.2, 3.0).unwrap();
        assert_eq!(ctx.path_weight(&[]).unwrap(), 1.0);
        assert_eq!(ctx.path_weight(&[1]).unwrap(), 0.95);
        assert_relative_eq!(ctx.path_weight(&[0, 1, 2]).unwrap(), 0.857375, epsilon = 1e-15);
        assert!(ctx.path_weight(&[0, 2]).is_err());
        assert!(ctx.path_weight(&[0, 1, 0]).is_err());
    }

    #[test]
    fn upsilon_examples() {
        let m = model(2, &[(0, 1)], 2.0, 1.0);
        assert_relative_eq!(upsilon_weight(&m, &[0, 1]).unwrap(), 2.0, epsilon = 1e-15);
        let k3 = model(3, &[(0, 1), (0, 2), (1, 2)], 1.0, 0.1);
        assert_relative_eq!(upsilon_weight(&k3, &[0, 1]).unwrap(), 0.3 + 2.0 * 2f64.ln(), epsilon = 1e-14);
        let k4 = model(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 1.0, 0.0);
        assert_relative_eq!(upsilon_weight(&k4, &[0, 1, 2]).unwrap(), 3.0 * 3f64.ln(), epsilon = 1e-14);
        let iso = model(1, &[], 1.0, 1.0);
        assert!(upsilon_weight(&iso, &[0]).is_err());
    }

    #[test]
    fn sqr_examples() {
        let g = SparseGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let c = CouplingMap::new(&g, vec![0.3, 0.7]).unwrap();
        let m = GibbsModel::zero_field(g, c, 1.0).unwrap();
        let ctx = WeightContext::new(&m, 0.2, 3.0).unwrap();
        let (a, b) = (0.3f64.tanh(), 0.7f64.tanh());
        assert_eq!(ctx.sqr_sphere(0, 0).unwrap(), 1.0);
        assert_relative_eq!(ctx.sqr_sphere(0, 2).unwrap(), a * a * b * b, epsilon = 1e-15);
        assert_eq!(ctx.sqr_sphere(0, 3).unwrap(), 0.0);
        let cold = model(3, &[(0, 1), (1, 2)], 1.0, 0.0);
        assert_eq!(WeightContext::new(&cold, 0.2, 3.0).unwrap().sqr_sphere(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn sqr_budget_is_explicit() {
        let edges: Vec<_> = (0..8).flat_map(|a| (a + 1..8).map(move |b| (a, b))).collect();
        let m = model(8, &edges, 1.0, 1.0);
        let mut ctx = WeightContext::new(&m, 0.2, 3.0).unwrap();
        ctx.budget = 50;
        assert!(matches!(ctx.sqr_sphere(0, 5), Err(Error::BudgetExhausted(50))));
    }

    #[test]
    fn bad_parameters() {
        let m = model(1, &[], 1.0, 1.0);
        assert!(WeightContext::new(&m, 0.0, 3.0).is_err());
        assert!(WeightContext::new(&m, 0.5, 0.0).is_err());
    }
}
