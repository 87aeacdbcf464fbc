//! Trees of self-avoiding walks, all-paths trees for unicyclic blocks, and
//! the edge-weight recursion that turns tree marginals into influences.

use std::fmt::Write as _;

use crate::gibbs_exact::{influence_matrix, GibbsModel, Pinning, DEFAULT_ENUMERATION_CAP};
use crate::linalg::{log_add_exp, logistic};
use crate::random_graph::{CouplingMap, EdgeId, SparseGraph, UNREACHED};
use crate::{Error, Result};

/// Default cap on the number of tree nodes.
pub const DEFAULT_WALK_BUDGET: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Saw,
    AllPaths,
}

/// Which constituent tree of an all-paths tree a node came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Base,
    High,
    Low,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub copy_of: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub pinning: Option<i8>,
    /// Graph edge joining this node's vertex to its parent's vertex.
    pub edge: Option<EdgeId>,
    pub part: Part,
}

/// Rooted tree whose nodes are copies of graph vertices; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkTree {
    nodes: Vec<TreeNode>,
    kind: TreeKind,
}

impl WalkTree {
    pub fn root(&self) -> usize {
        0
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Nodes that are copies of `v`.
    pub fn copies(&self, v: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].copy_of == v).collect()
    }

    pub fn copy_counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for node in &self.nodes {
            c[node.copy_of] += 1;
        }
        c
    }

    /// Vertex sequence of the walk from the root to node `i`.
    pub fn walk(&self, i: usize) -> Vec<usize> {
        let mut out = vec![self.nodes[i].copy_of];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            out.push(self.nodes[p].copy_of);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Nodes from the root to `i`, inclusive.
    pub fn root_path(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Child of `z` that copies `v`, if any.
    pub fn child_copying(&self, z: usize, v: usize) -> Option<usize> {
        self.nodes[z].children.iter().copied().find(|&c| self.nodes[c].copy_of == v)
    }

    /// Follows a vertex sequence from the root.
    pub fn find_walk(&self, walk: &[usize]) -> Option<usize> {
        if walk.first() != Some(&self.nodes[0].copy_of) {
            return None;
        }
        walk[1..].iter().try_fold(0, |z, &v| self.child_copying(z, v))
    }

    /// Nodes as vertices and tree edges as graph edges; the second value maps
    /// each new edge id to the child node it leads to.
    pub fn to_graph(&self) -> Result<(SparseGraph, Vec<usize>)> {
        let pairs: Vec<(usize, usize)> =
            (1..self.nodes.len()).map(|z| (self.nodes[z].parent.expect("non-root"), z)).collect();
        let g = SparseGraph::from_edges(self.nodes.len(), &pairs)?;
        let child = g.edges().iter().map(|&(_, z)| z).collect();
        Ok((g, child))
    }

    /// Graphviz rendering with labels `copy_of:pinning`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph walk_tree {\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let pin = match node.pinning {
                Some(1) => "+",
                Some(_) => "-",
                None => "none",
            };
            let _ = writeln!(s, "  n{i} [label=\"{}:{pin}\"];", node.copy_of);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                let _ = writeln!(s, "  n{p} -> n{i};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Ranks for the identity ordering.
pub fn natural_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

struct SawBuilder<'a> {
    g: &'a SparseGraph,
    rank: &'a [usize],
    removed: &'a [bool],
    pinning: &'a Pinning,
    budget: usize,
    part: Part,
    nodes: Vec<TreeNode>,
    walk: Vec<usize>,
    pos: Vec<usize>,
}

impl SawBuilder<'_> {
    fn push(&mut self, parent: usize, copy_of: usize, edge: EdgeId, pinning: Option<i8>) -> Result<usize> {
        if self.nodes.len() >= self.budget {
            return Err(Error::BudgetExhausted(self.budget as u64));
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode { copy_of, parent: Some(parent), children: Vec::new(), pinning, edge: Some(edge), part: self.part });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    fn grow(&mut self, node: usize) -> Result<()> {
        let r = self.walk.len() - 1;
        let v = self.walk[r];
        let back = if r > 0 { Some(self.walk[r - 1]) } else { None };
        for &(x, e) in self.g.incident(v) {
            if self.removed[e] || Some(x) == back {
                continue;
            }
            let external = self.pinning.get(&x).copied();
            if self.pos[x] != UNREACHED {
                let j = self.pos[x];
                let closing = if self.rank[self.walk[j + 1]] > self.rank[v] { -1 } else { 1 };
                self.push(node, x, e, Some(external.unwrap_or(closing)))?;
            } else {
                let child = self.push(node, x, e, external)?;
                self.pos[x] = self.walk.len();
                self.walk.push(x);
                self.grow(child)?;
                self.walk.pop();
                self.pos[x] = UNREACHED;
            }
        }
        Ok(())
    }
}

fn saw_nodes(
    g: &SparseGraph,
    w: usize,
    rank: &[usize],
    removed: &[bool],
    pinning: &Pinning,
    budget: usize,
    part: Part,
) -> Result<Vec<TreeNode>> {
    let mut b = SawBuilder {
        g,
        rank,
        removed,
        pinning,
        budget,
        part,
        nodes: vec![TreeNode { copy_of: w, parent: None, children: Vec::new(), pinning: pinning.get(&w).copied(), edge: None, part }],
        walk: vec![w],
        pos: vec![UNREACHED; g.n()],
    };
    b.pos[w] = 0;
    b.grow(0)?;
    Ok(b.nodes)
}

fn check_rank(g: &SparseGraph, rank: &[usize]) -> Result<()> {
    let mut seen = vec![false; g.n()];
    if rank.len() != g.n() || rank.iter().any(|&r| r >= g.n() || std::mem::replace(&mut seen[r], true)) {
        return Err(Error::invalid("ordering must be a permutation of the vertices"));
    }
    Ok(())
}

/// Tree of self-avoiding walks from `w`. A walk that steps back onto an
/// earlier vertex `v_j` ends in a leaf pinned to `-1` when
/// `rank(v_{j+1}) > rank(v_{r-1})` and to `+1` otherwise. Copies of
/// externally pinned vertices carry the external value.
pub fn build_saw_tree(g: &SparseGraph, w: usize, rank: &[usize], pinning: &Pinning, budget: usize) -> Result<WalkTree> {
    if w >= g.n() {
        return Err(Error::invalid(format!("start vertex {w} out of range")));
    }
    check_rank(g, rank)?;
    let removed = vec![false; g.m()];
    let nodes = saw_nodes(g, w, rank, &removed, pinning, budget, Part::Base)?;
    Ok(WalkTree { nodes, kind: TreeKind::Saw })
}

/// Vertices of the unique cycle of a connected unicyclic graph, in cyclic order
/// starting at the smallest vertex.
pub fn unique_cycle(g: &SparseGraph) -> Option<Vec<usize>> {
    let mut deg: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; g.n()];
    let mut stack: Vec<usize> = (0..g.n()).filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for u in g.neighbors(v) {
            if alive[u] {
                deg[u] -= 1;
                if deg[u] == 1 {
                    stack.push(u);
                }
            }
        }
    }
    let start = (0..g.n()).find(|&v| alive[v])?;
    let mut cycle = vec![start];
    let mut prev = UNREACHED;
    let mut cur = start;
    loop {
        let next = g.neighbors(cur).find(|&u| alive[u] && u != prev)?;
        if next == start {
            break;
        }
        cycle.push(next);
        prev = cur;
        cur = next;
    }
    Some(cycle)
}

/// All-paths tree of a connected graph with at most one cycle.
///
/// For a tree this is the graph rooted at `w`. Otherwise let `x_1` be the
/// cycle vertex nearest `w` and orient the cycle `x_1, x_2, ..., x_ℓ` with
/// `x_2 > x_ℓ`. The two leaf copies of `x_1` in the walk tree from `w`
/// (reached around the cycle via `x_2` and via `x_ℓ`) are replaced by walk
/// trees from `x_1` in the graph with the edge to `w` and one cycle edge
/// (`x_1 x_ℓ`, resp. `x_1 x_2`) removed.
pub fn build_ap_tree(g: &SparseGraph, w: usize) -> Result<WalkTree> {
    if w >= g.n() {
        return Err(Error::invalid(format!("start vertex {w} out of range")));
    }
    if !g.is_connected() || g.m() > g.n() {
        return Err(Error::invalid("all-paths tree needs a connected graph with at most one cycle"));
    }
    let rank = natural_order(g.n());
    let none = Pinning::new();
    let no_removed = vec![false; g.m()];
    let mut nodes = saw_nodes(g, w, &rank, &no_removed, &none, DEFAULT_WALK_BUDGET, Part::Base)?;
    if g.m() + 1 == g.n() {
        return Ok(WalkTree { nodes, kind: TreeKind::AllPaths });
    }
    let cycle = unique_cycle(g).ok_or_else(|| Error::invalid("expected a cycle"))?;
    let bfs = g.bfs(&[w]);
    let x1 = *cycle.iter().min_by_key(|&&v| (bfs.dist[v], v)).expect("non-empty cycle");
    let lead = bfs.path_to(x1).expect("connected");
    let at = cycle.iter().position(|&v| v == x1).expect("on cycle");
    let len = cycle.len();
    let (a, b) = (cycle[(at + 1) % len], cycle[(at + len - 1) % len]);
    let (x2, xl) = if a > b { (a, b) } else { (b, a) };
    let forward: Vec<usize> = if x2 == a {
        (1..len).map(|i| cycle[(at + i) % len]).collect()
    } else {
        (1..len).map(|i| cycle[(at + len - i) % len]).collect()
    };
    let mut to_w = None;
    if lead.len() > 1 {
        to_w = g.edge_id(x1, lead[lead.len() - 2]);
    }
    let glue = |nodes: &mut Vec<TreeNode>, around: &[usize], cut: EdgeId, part: Part| -> Result<()> {
        let mut walk = lead.clone();
        walk.extend_from_slice(around);
        walk.push(x1);
        let tree = WalkTree { nodes: std::mem::take(nodes), kind: TreeKind::Saw };
        let at = tree.find_walk(&walk).ok_or_else(|| Error::Numerical("cycle leaf missing from walk tree".into()))?;
        *nodes = tree.nodes;
        let mut removed = vec![false; g.m()];
        removed[cut] = true;
        if let Some(e) = to_w {
            removed[e] = true;
        }
        let sub = saw_nodes(g, x1, &rank, &removed, &none, DEFAULT_WALK_BUDGET, part)?;
        let offset = nodes.len() - 1;
        nodes[at].pinning = None;
        nodes[at].part = part;
        for (i, mut node) in sub.into_iter().enumerate().skip(1) {
            node.parent = node.parent.map(|p| if p == 0 { at } else { p + offset });
            node.children.iter_mut().for_each(|c| *c += offset);
            if node.parent == Some(at) {
                nodes[at].children.push(i + offset);
            }
            nodes.push(node);
        }
        Ok(())
    };
    let high_cut = g.edge_id(x1, xl).expect("cycle edge");
    let low_cut = g.edge_id(x1, x2).expect("cycle edge");
    let backward: Vec<usize> = forward.iter().rev().copied().collect();
    glue(&mut nodes, &forward, high_cut, Part::High)?;
    glue(&mut nodes, &backward, low_cut, Part::Low)?;
    Ok(WalkTree { nodes, kind: TreeKind::AllPaths })
}

/// Every self-avoiding walk of `g` lifts to a path of copies in the
/// all-paths tree.
pub fn all_paths_property_check(g: &SparseGraph, w: usize, budget: u64) -> Result<bool> {
    let tree = build_ap_tree(g, w)?;
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for (i, node) in tree.nodes.iter().enumerate() {
        if let Some(p) = node.parent {
            nbrs[i].push(p);
            nbrs[p].push(i);
        }
    }
    let mut spent = 0u64;
    for start in 0..g.n() {
        let mut walk = vec![start];
        let mut on = vec![false; g.n()];
        on[start] = true;
        if !lift_all(g, &tree, &nbrs, &mut walk, &mut on, &mut spent, budget)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn lift_all(
    g: &SparseGraph,
    tree: &WalkTree,
    nbrs: &[Vec<usize>],
    walk: &mut Vec<usize>,
    on: &mut [bool],
    spent: &mut u64,
    budget: u64,
) -> Result<bool> {
    *spent += 1;
    if *spent > budget {
        return Err(Error::BudgetExhausted(budget));
    }
    if !liftable(tree, nbrs, walk) {
        return Ok(false);
    }
    let v = *walk.last().expect("non-empty");
    for x in g.neighbors(v) {
        if on[x] {
            continue;
        }
        on[x] = true;
        walk.push(x);
        let ok = lift_all(g, tree, nbrs, walk, on, spent, budget)?;
        walk.pop();
        on[x] = false;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

fn liftable(tree: &WalkTree, nbrs: &[Vec<usize>], walk: &[usize]) -> bool {
    fn extend(tree: &WalkTree, nbrs: &[Vec<usize>], walk: &[usize], z: usize) -> bool {
        match walk.split_first() {
            None => true,
            Some((&v, rest)) => nbrs[z].iter().any(|&y| tree.nodes[y].copy_of == v && extend(tree, nbrs, rest, y)),
        }
    }
    tree.copies(walk[0]).into_iter().any(|z| extend(tree, nbrs, &walk[1..], z))
}

/// Spin system on a walk tree: per-node field and the coupling `βJ` of the
/// edge to the parent (zero at the root).
#[derive(Clone, Debug)]
pub struct TreeSpins {
    pub field: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl TreeSpins {
    pub fn from_model(tree: &WalkTree, m: &GibbsModel) -> Self {
        Self::from_parts(tree, m.couplings(), m.beta(), m.field())
    }

    pub fn from_parts(tree: &WalkTree, c: &CouplingMap, beta: f64, field: &[f64]) -> Self {
        Self {
            field: tree.nodes.iter().map(|z| field[z.copy_of]).collect(),
            coupling: tree.nodes.iter().map(|z| z.edge.map_or(0.0, |e| beta * c.get(e))).collect(),
        }
    }
}

/// `log(μ(σ_z = +) / μ(σ_z = -))` for the subtree below each node, by the
/// leaf-to-root recursion. Pinned nodes give `±∞`.
pub fn log_ratios(tree: &WalkTree, spins: &TreeSpins) -> Vec<f64> {
    let mut out = vec![0.0; tree.len()];
    // Children always have larger ids than their parents.
    for z in (0..tree.len()).rev() {
        let node = &tree.nodes[z];
        out[z] = match node.pinning {
            Some(s) if s > 0 => f64::INFINITY,
            Some(_) => f64::NEG_INFINITY,
            None => {
                2.0 * spins.field[z]
                    + node
                        .children
                        .iter()
                        .map(|&c| {
                            let b = spins.coupling[c];
                            log_add_exp(out[c] + b, -b) - log_add_exp(out[c] - b, b)
                        })
                        .sum::<f64>()
            }
        };
    }
    out
}

/// Ratio of marginals at the root of the subtree below `node`.
pub fn ratio_of_marginals(tree: &WalkTree, spins: &TreeSpins, node: usize) -> f64 {
    log_ratios(tree, spins)[node].exp()
}

/// `h(x) = -(1 - e^{4b}) e^x / ((e^{x+2b} + 1)(e^x + e^{2b}))`, evaluated
/// as `logistic(x + 2b) - logistic(x - 2b)`.
pub fn h_edge(x: f64, b: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    logistic(x + 2.0 * b) - logistic(x - 2.0 * b)
}

/// Weight of the edge from each node to its parent; zero at the root and
/// whenever either end is pinned.
pub fn phi_weights(tree: &WalkTree, spins: &TreeSpins) -> Vec<f64> {
    let lr = log_ratios(tree, spins);
    tree.nodes
        .iter()
        .enumerate()
        .map(|(z, node)| match node.parent {
            None => 0.0,
            Some(p) if node.pinning.is_some() || tree.nodes[p].pinning.is_some() => 0.0,
            Some(_) => h_edge(lr[z], spins.coupling[z]),
        })
        .collect()
}

/// Influence of the root on every node: the product of edge weights along
/// the root path.
pub fn tree_influences(tree: &WalkTree, spins: &TreeSpins) -> Vec<f64> {
    let phi = phi_weights(tree, spins);
    let mut out = vec![1.0; tree.len()];
    for z in 1..tree.len() {
        let p = tree.nodes[z].parent.expect("non-root");
        out[z] = out[p] * phi[z];
    }
    out
}

pub fn tree_influence(tree: &WalkTree, spins: &TreeSpins, u: usize) -> f64 {
    tree_influences(tree, spins)[u]
}

/// `max_u |I_G(w, u) - Σ_{v copies u} I_T(root, v)|` over free vertices `u`.
pub fn saw_reduction_check(m: &GibbsModel, w: usize, pinning: &Pinning) -> Result<f64> {
    if pinning.contains_key(&w) {
        return Err(Error::invalid("start vertex is pinned"));
    }
    let exact = influence_matrix(m, pinning, DEFAULT_ENUMERATION_CAP)?;
    let tree = build_saw_tree(m.graph(), w, &natural_order(m.n()), pinning, DEFAULT_WALK_BUDGET)?;
    let spins = TreeSpins::from_model(&tree, m);
    let infl = tree_influences(&tree, &spins);
    let mut sums = vec![0.0; m.n()];
    for (z, node) in tree.nodes.iter().enumerate() {
        sums[node.copy_of] += infl[z];
    }
    let mut worst = 0.0f64;
    for &u in &exact.free {
        let diff = (exact.get(w, u).expect("free") - sums[u]).abs();
        worst = worst.max(diff);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SparseGraph {
        SparseGraph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn tree_input_gives_rerooted_tree() {
        let g = graph(4, &[(0, 1), (1, 2), (1, 3)]);
        let t = build_saw_tree(&g, 2, &natural_order(4), &Pinning::new(), 100).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.nodes().iter().all(|z| z.pinning.is_none()));
        assert_eq!(t.walk(3), vec![2, 1, 3]);
    }

    #[test]
    fn triangle_closures() {
        let g = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        let t = build_saw_tree(&g, 0, &natural_order(3), &Pinning::new(), 100).unwrap();
        assert_eq!(t.len(), 7);
        // 0-1-2-0: v_{j+1} = 1 < v_{ℓ-1} = 2, pinned +1.
        let a = t.find_walk(&[0, 1, 2, 0]).unwrap();
        let b = t.find_walk(&[0, 2, 1, 0]).unwrap();
        assert_eq!(t.node(a).pinning, Some(1));
        assert_eq!(t.node(b).pinning, Some(-1));
        assert_eq!(t.copies(0).len(), 3);
    }

    #[test]
    fn dot_labels() {
        let g = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        let t = build_saw_tree(&g, 0, &natural_order(3), &Pinning::new(), 100).unwrap();
        let dot = t.to_dot();
        assert!(dot.contains("[label=\"0:+\"]"));
        assert!(dot.contains("[label=\"0:-\"]"));
        assert!(dot.contains("n0 -> n1;"));
    }

    #[test]
    fn budget_is_enforced() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(matches!(
            build_saw_tree(&g, 0, &natural_order(4), &Pinning::new(), 5),
            Err(Error::BudgetExhausted(5))
        ));
    }

    #[test]
    fn ap_tree_of_path_is_path() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let t = build_ap_tree(&g, 0).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.walk(3), vec![0, 1, 2, 3]);
        assert!(all_paths_property_check(&g, 0, 1_000_000).unwrap());
    }

    #[test]
    fn ap_tree_of_triangle_with_pendant() {
        // Pendant 3 attached to 0; cycle 0-1-2 with x_1 = 0, x_2 = 2, x_ℓ = 1.
        let g = graph(4, &[(0, 1), (0, 2), (1, 2), (0, 3)]);
        let t = build_ap_tree(&g, 3).unwrap();
        let high = t.find_walk(&[3, 0, 2, 1, 0]).unwrap();
        let low = t.find_walk(&[3, 0, 1, 2, 0]).unwrap();
        assert_eq!(t.node(high).part, Part::High);
        assert_eq!(t.node(low).part, Part::Low);
        assert!(t.node(high).pinning.is_none());
        // High subtree: walks from 0 without edges {0,3} and {0,1}: 0-2-1.
        assert_eq!(t.walk(*t.node(high).children.first().unwrap()), vec![3, 0, 2, 1, 0, 2]);
        assert!(t.find_walk(&[3, 0, 2, 1, 0, 2, 1]).is_some());
        assert!(t.find_walk(&[3, 0, 1, 2, 0, 1, 2]).is_some());
        assert_eq!(t.len(), 8 + 2 + 2);
        assert!(t.copy_counts(4).iter().all(|&c| c <= 4));
        assert!(all_paths_property_check(&g, 3, 1_000_000).unwrap());
    }

    #[test]
    fn ap_tree_rejects_two_cycles() {
        let g = graph(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]);
        assert!(build_ap_tree(&g, 0).is_err());
        assert!(all_paths_property_check(&g, 0, 1000).is_err());
    }

    #[test]
    fn ratio_basics() {
        let g = graph(1, &[]);
        let t = build_saw_tree(&g, 0, &[0], &Pinning::new(), 10).unwrap();
        let spins = TreeSpins { field: vec![0.0], coupling: vec![0.0] };
        assert_eq!(ratio_of_marginals(&t, &spins, 0), 1.0);
        let pinned = build_saw_tree(&g, 0, &[0], &[(0, 1)].into_iter().collect(), 10).unwrap();
        assert_eq!(ratio_of_marginals(&pinned, &spins, 0), f64::INFINITY);
    }

    #[test]
    fn h_matches_literal_formula() {
        let literal = |x: f64, b: f64| {
            -(1.0 - (4.0 * b).exp()) * x.exp() / (((x + 2.0 * b).exp() + 1.0) * (x.exp() + (2.0 * b).exp()))
        };
        for &(x, b) in &[(0.0, 0.3), (1.2, -0.4), (-2.0, 0.9), (0.5, 0.0)] {
            assert_relative_eq!(h_edge(x, b), literal(x, b), epsilon = 1e-13);
        }
        assert_relative_eq!(h_edge(0.0, 0.3), 0.3f64.tanh(), epsilon = 1e-15);
        assert_eq!(h_edge(f64::INFINITY, 0.3), 0.0);
    }

    #[test]
    fn single_edge_influence_is_tanh() {
        let g = graph(2, &[(0, 1)]);
        let m = GibbsModel::zero_field(g.clone(), CouplingMap::constant(&g, 0.7), 0.8).unwrap();
        let t = build_saw_tree(&g, 0, &natural_order(2), &Pinning::new(), 10).unwrap();
        let s = TreeSpins::from_model(&t, &m);
        assert_eq!(tree_influence(&t, &s, 0), 1.0);
        assert_relative_eq!(tree_influence(&t, &s, 1), 0.56f64.tanh(), epsilon = 1e-15);
    }

    #[test]
    fn reduction_exact_on_triangle() {
        let g = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        let c = CouplingMap::new(&g, vec![0.8, -1.1, 0.5]).unwrap();
        let m = GibbsModel::zero_field(g, c, 1.0).unwrap();
        assert!(saw_reduction_check(&m, 0, &Pinning::new()).unwrap() <= 1e-9);
    }
}
