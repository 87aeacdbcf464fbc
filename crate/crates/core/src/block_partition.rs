//! Block vertices, staged decompositions, refinement into a block
//! partition and structural validation.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::random_graph::{EdgeId, SparseGraph, UNREACHED};
use crate::walk_trees::unique_cycle;
use crate::weights::WeightContext;
use crate::{Error, Result};

/// Radius used for the second decomposition fed to the refinement.
pub const REFINE_RADIUS: usize = 100;
/// Collar width around the outer boundary of a coarse block.
pub const REFINE_BUFFER: usize = 90;
/// Default cap on walk extensions per block-vertex query.
pub const DEFAULT_VERDICT_BUDGET: u64 = 2_000_000;

/// `ζ = ε (1 - 10⁻⁴)`.
pub fn zeta_for(epsilon: f64) -> f64 {
    epsilon * (1.0 - 1e-4)
}

/// Integer thresholds used by the construction, all overridable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionThresholds {
    /// Maximal walk length for condition (a).
    pub path_range: usize,
    /// Cycles up to this length count as short.
    pub short_cycle: usize,
    /// Minimal distance between two short cycles.
    pub cycle_separation: usize,
    /// Unicyclic blocks must stay inside this neighbourhood of their cycle.
    pub unicyclic_radius: usize,
    /// Tree-block components must stay strictly inside this radius.
    pub tree_radius: usize,
    /// Minimal distance from a block cycle to the block's outer boundary.
    pub cycle_buffer: usize,
    pub refine_buffer: usize,
    pub refine_radius: usize,
    pub verdict_budget: u64,
}

impl PartitionThresholds {
    /// Asymptotic formulas rounded up. Needs `n ≥ 3`, `d > 1`.
    pub fn from_formulas(n: usize, d: f64, epsilon: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("thresholds need n ≥ 3"));
        }
        if !(d > 1.0) || !d.is_finite() {
            return Err(Error::invalid(format!("thresholds need d > 1, got {d}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon {epsilon} must lie in (0, 1)")));
        }
        let log_n = (n as f64).ln();
        let log_d = d.ln();
        let up = |x: f64| x.max(0.0).ceil() as usize;
        Ok(Self {
            path_range: up(log_n),
            short_cycle: up(4.0 * log_n / log_d.powi(4)),
            cycle_separation: up(2.0 * log_n / log_d.powi(2)),
            unicyclic_radius: up(2.0 * log_n / log_d.powi(2)),
            tree_radius: up(4.0 * log_n / log_d.powi(2)),
            cycle_buffer: up(150.0 / epsilon * log_n.ln()),
            refine_buffer: REFINE_BUFFER,
            refine_radius: REFINE_RADIUS,
            verdict_budget: DEFAULT_VERDICT_BUDGET,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictStatus {
    Yes,
    No,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockCondition {
    A,
    B,
    C,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Witness {
    Path(Vec<usize>),
    Edge(EdgeId),
    Vertex(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockVertexVerdict {
    pub status: VerdictStatus,
    pub failing: Option<(BlockCondition, Witness)>,
    /// Walk extensions explored for condition (a).
    pub explored: u64,
}

impl BlockVertexVerdict {
    pub fn is_yes(&self) -> bool {
        self.status == VerdictStatus::Yes
    }
}

/// Answers block-vertex queries for a fixed context, radius and walk range.
///
/// Condition (a) is decided by a depth-first search over self-avoiding walks
/// with a dynamic-programming upper bound on the best continuation.
pub struct BlockVertexOracle<'c, 'a> {
    ctx: &'c WeightContext<'a>,
    radius: usize,
    range: usize,
    budget: u64,
    gamma_cap: f64,
    sq_cap: f64,
    // reach[r][arc]: largest prefix product of weights over non-backtracking
    // walks of at most r steps that start with `arc`
    reach: Vec<Vec<f64>>,
}

impl<'c, 'a> BlockVertexOracle<'c, 'a> {
    pub fn new(ctx: &'c WeightContext<'a>, radius: usize, range: usize, budget: u64) -> Self {
        let g = ctx.model().graph();
        let w = ctx.vertex_weights();
        let mut reach = vec![vec![0.0f64; 2 * g.m()]];
        for r in 1..=range {
            let prev = &reach[r - 1];
            let row = (0..2 * g.m())
                .map(|a| {
                    let (tail, head) = arc_ends(g, a);
                    let onward = g
                        .incident(head)
                        .iter()
                        .filter(|&&(y, _)| y != tail)
                        .map(|&(_, e)| prev[arc(g, e, head)])
                        .fold(1.0, f64::max);
                    w[head] * onward
                })
                .collect();
            reach.push(row);
        }
        Self {
            ctx,
            radius,
            range,
            budget,
            gamma_cap: ctx.d().powf(-0.1),
            sq_cap: (1.0 + ctx.epsilon()) * ctx.d(),
            reach,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn verdict(&self, u: usize) -> BlockVertexVerdict {
        let g = self.ctx.model().graph();
        let ball = g.ball(u, self.radius);
        for &v in &ball {
            for &(_, e) in g.incident(v) {
                if self.ctx.edge_influence(e) > self.gamma_cap {
                    return no(BlockCondition::B, Witness::Edge(e), 0);
                }
            }
        }
        let couplings = self.ctx.model().couplings();
        for &v in &ball {
            let sq: f64 = g.incident(v).iter().map(|&(_, e)| couplings.get(e).powi(2)).sum();
            if sq > self.sq_cap {
                return no(BlockCondition::C, Witness::Vertex(v), 0);
            }
        }
        let mut search = WalkSearch {
            oracle: self,
            on_path: vec![false; g.n()],
            path: vec![u],
            explored: 0,
        };
        search.on_path[u] = true;
        let start = self.ctx.vertex_weight(u);
        if start >= 1.0 {
            return no(BlockCondition::A, Witness::Path(vec![u]), 0);
        }
        match search.run(u, start) {
            Walk::Clear => BlockVertexVerdict { status: VerdictStatus::Yes, failing: None, explored: search.explored },
            Walk::Violation => {
                let explored = search.explored;
                no(BlockCondition::A, Witness::Path(search.path), explored)
            }
            Walk::OutOfBudget => BlockVertexVerdict {
                status: VerdictStatus::Undetermined,
                failing: None,
                explored: search.explored,
            },
        }
    }

    pub fn verdicts(&self) -> Vec<BlockVertexVerdict> {
        (0..self.ctx.model().n()).map(|u| self.verdict(u)).collect()
    }
}

fn arc(g: &SparseGraph, e: EdgeId, from: usize) -> usize {
    2 * e + usize::from(g.edge(e).0 != from)
}

fn arc_ends(g: &SparseGraph, a: usize) -> (usize, usize) {
    let (u, v) = g.edge(a / 2);
    if a % 2 == 0 {
        (u, v)
    } else {
        (v, u)
    }
}

fn no(cond: BlockCondition, witness: Witness, explored: u64) -> BlockVertexVerdict {
    BlockVertexVerdict { status: VerdictStatus::No, failing: Some((cond, witness)), explored }
}

enum Walk {
    Clear,
    Violation,
    OutOfBudget,
}

struct WalkSearch<'o, 'c, 'a> {
    oracle: &'o BlockVertexOracle<'c, 'a>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    explored: u64,
}

impl WalkSearch<'_, '_, '_> {
    fn run(&mut self, v: usize, product: f64) -> Walk {
        let left = self.oracle.range + 1 - self.path.len();
        if left == 0 {
            return Walk::Clear;
        }
        let ctx = self.oracle.ctx;
        let g = ctx.model().graph();
        let back = self.path.len().checked_sub(2).map(|i| self.path[i]);
        let bound = g
            .incident(v)
            .iter()
            .filter(|&&(x, _)| Some(x) != back)
            .map(|&(_, e)| self.oracle.reach[left][arc(g, e, v)])
            .fold(0.0, f64::max);
        if product * bound < 1.0 {
            return Walk::Clear;
        }
        for x in g.neighbors(v) {
            if self.on_path[x] {
                continue;
            }
            self.explored += 1;
            if self.explored > self.oracle.budget {
                return Walk::OutOfBudget;
            }
            let p = product * ctx.vertex_weight(x);
            self.path.push(x);
            if p >= 1.0 {
                return Walk::Violation;
            }
            self.on_path[x] = true;
            match self.run(x, p) {
                Walk::Clear => {}
                other => return other,
            }
            self.on_path[x] = false;
            self.path.pop();
        }
        Walk::Clear
    }
}

/// Single query with radius `k` and walk range `range`.
pub fn is_block_vertex(ctx: &WeightContext, u: usize, k: usize, range: usize) -> BlockVertexVerdict {
    BlockVertexOracle::new(ctx, k, range, ctx.budget).verdict(u)
}

/// All simple cycles of length at most `max_len`, each once, starting at
/// its minimum vertex and continuing towards the smaller neighbour.
pub fn find_short_cycles(g: &SparseGraph, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if max_len < 3 {
        return out;
    }
    let mut on_path = vec![false; g.n()];
    for s in 0..g.n() {
        let mut path = vec![s];
        on_path[s] = true;
        cycle_dfs(g, s, max_len, &mut path, &mut on_path, &mut out);
        on_path[s] = false;
    }
    out
}

fn cycle_dfs(
    g: &SparseGraph,
    s: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    let v = *path.last().unwrap();
    for x in g.neighbors(v) {
        if x == s && path.len() >= 3 && path[1] < v {
            out.push(path.clone());
        }
        if x <= s || on_path[x] || path.len() >= max_len {
            continue;
        }
        on_path[x] = true;
        path.push(x);
        cycle_dfs(g, s, max_len, path, on_path, out);
        path.pop();
        on_path[x] = false;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Single,
    Tree,
    Unicyclic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub vertices: Vec<usize>,
    pub inner_boundary: Vec<usize>,
    #[serde(default)]
    pub outer_boundary: Vec<usize>,
    pub cycle: Option<Vec<usize>>,
}

impl Block {
    /// Classifies `vertices` by the number of induced edges and fills in both
    /// boundaries. More than one extra edge is an error.
    pub fn from_vertices(g: &SparseGraph, vertices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let vertices: Vec<usize> = vertices.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if vertices.is_empty() {
            return Err(Error::invalid("empty block"));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= g.n()) {
            return Err(Error::invalid(format!("vertex {v} out of range")));
        }
        let mut member = vec![false; g.n()];
        for &v in &vertices {
            member[v] = true;
        }
        let (inner_boundary, outer_boundary) = boundaries(g, &member, &vertices);
        let m = g.edges_within(&member);
        let sub = g.induced_subgraph(&vertices)?;
        if !sub.graph.is_connected() {
            return Err(Error::invalid(format!("block starting at {} is disconnected", vertices[0])));
        }
        let (kind, cycle) = if vertices.len() == 1 {
            (BlockKind::Single, None)
        } else if m + 1 == vertices.len() {
            (BlockKind::Tree, None)
        } else if m == vertices.len() {
            let c = unique_cycle(&sub.graph).ok_or_else(|| Error::invalid("unicyclic block without cycle"))?;
            (BlockKind::Unicyclic, Some(canonical_cycle(c.iter().map(|&i| sub.vertices[i]).collect())))
        } else {
            return Err(Error::invalid(format!(
                "block starting at {} has {} edges on {} vertices",
                vertices[0],
                m,
                vertices.len()
            )));
        };
        Ok(Self { kind, vertices, inner_boundary, outer_boundary, cycle })
    }

    pub fn singleton(g: &SparseGraph, v: usize) -> Self {
        let outer: Vec<usize> = g.neighbors(v).collect();
        let inner = if outer.is_empty() { vec![] } else { vec![v] };
        Self { kind: BlockKind::Single, vertices: vec![v], inner_boundary: inner, outer_boundary: outer, cycle: None }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_multi(&self) -> bool {
        self.vertices.len() > 1
    }

    pub fn min_vertex(&self) -> usize {
        self.vertices[0]
    }
}

fn boundaries(g: &SparseGraph, member: &[bool], vertices: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut inner = Vec::new();
    let mut outer = BTreeSet::new();
    for &v in vertices {
        let mut touches = false;
        for x in g.neighbors(v) {
            if !member[x] {
                touches = true;
                outer.insert(x);
            }
        }
        if touches {
            inner.push(v);
        }
    }
    (inner, outer.into_iter().collect())
}

/// Rotate and reflect so the minimum vertex leads, followed by its smaller
/// cycle neighbour.
pub fn canonical_cycle(mut c: Vec<usize>) -> Vec<usize> {
    if c.is_empty() {
        return c;
    }
    let pos = (0..c.len()).min_by_key(|&i| c[i]).unwrap();
    c.rotate_left(pos);
    if c.len() > 2 && c[c.len() - 1] < c[1] {
        c[1..].reverse();
    }
    c
}

#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
pub enum DecompositionFailure {
    #[error("condition 1: cycles {first:?} and {second:?} at distance {distance}")]
    Condition1 { first: Vec<usize>, second: Vec<usize>, distance: usize },
    #[error("condition 2: block of cycle {cycle:?} escapes its neighbourhood along {path:?}")]
    Condition2 { cycle: Vec<usize>, path: Vec<usize> },
    #[error("condition 3: component of {vertex} reaches too far along {path:?}")]
    Condition3 { vertex: usize, path: Vec<usize> },
    #[error("block-vertex status of {vertex} undetermined within the search budget")]
    Undetermined { vertex: usize },
    #[error("structure clause {clause}: {detail}")]
    Structure { clause: String, detail: String },
}

impl DecompositionFailure {
    /// Short tag: `"1"`, `"2"`, `"3"`, `"budget"` or `"structure"`.
    pub fn tag(&self) -> &'static str {
        match self {
            DecompositionFailure::Condition1 { .. } => "1",
            DecompositionFailure::Condition2 { .. } => "2",
            DecompositionFailure::Condition3 { .. } => "3",
            DecompositionFailure::Undetermined { .. } => "budget",
            DecompositionFailure::Structure { .. } => "structure",
        }
    }
}

/// A list of blocks covering the vertex set together with the accuracy and
/// radius they were built for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub epsilon: f64,
    pub k: usize,
    pub blocks: Vec<Block>,
    #[serde(skip)]
    pub block_vertex: Vec<bool>,
}

pub type Decomposition = BlockPartition;

impl BlockPartition {
    pub fn all_singletons(g: &SparseGraph, epsilon: f64, k: usize) -> Self {
        Self {
            epsilon,
            k,
            blocks: (0..g.n()).map(|v| Block::singleton(g, v)).collect(),
            block_vertex: Vec::new(),
        }
    }

    pub fn sort(&mut self) {
        self.blocks.sort_by_key(|b| b.min_vertex());
    }

    /// Block index of each vertex; `UNREACHED` where uncovered.
    pub fn owner(&self, n: usize) -> Vec<usize> {
        let mut owner = vec![UNREACHED; n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &v in &b.vertices {
                if v < n {
                    owner[v] = i;
                }
            }
        }
        owner
    }

    pub fn multi_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_multi())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut sorted = self.clone();
        sorted.sort();
        Ok(serde_json::to_string_pretty(&sorted)?)
    }
}

fn structure(clause: &str, detail: String) -> DecompositionFailure {
    DecompositionFailure::Structure { clause: clause.into(), detail }
}

/// Staged construction: short cycles, their separation, block vertices,
/// unicyclic blocks, tree blocks, singletons; then a structural check of
/// the result.
pub fn build_decomposition(
    ctx: &WeightContext,
    k: usize,
    th: &PartitionThresholds,
) -> Result<Decomposition, DecompositionFailure> {
    let g = ctx.model().graph();
    let n = g.n();
    let cycles = find_short_cycles(g, th.short_cycle);

    let cycle_dist: Vec<Vec<usize>> = cycles.iter().map(|c| g.bfs(c).dist).collect();
    for i in 0..cycles.len() {
        for j in i + 1..cycles.len() {
            let dist = cycles[j].iter().map(|&v| cycle_dist[i][v]).min().unwrap();
            if dist < th.cycle_separation {
                return Err(DecompositionFailure::Condition1 {
                    first: cycles[i].clone(),
                    second: cycles[j].clone(),
                    distance: dist,
                });
            }
        }
    }

    let oracle = BlockVertexOracle::new(ctx, k, th.path_range, th.verdict_budget);
    let mut block_vertex = vec![false; n];
    for (u, slot) in block_vertex.iter_mut().enumerate() {
        match oracle.verdict(u).status {
            VerdictStatus::Yes => *slot = true,
            VerdictStatus::No => {}
            VerdictStatus::Undetermined => return Err(DecompositionFailure::Undetermined { vertex: u }),
        }
    }

    let mut assigned = vec![false; n];
    let mut blocks = Vec::new();
    for (c, dist) in cycles.iter().zip(&cycle_dist) {
        let near = |w: usize| dist[w] < th.cycle_buffer;
        let bfs = g.bfs_restricted(c, |w| near(w) || !block_vertex[w]);
        let mut members = Vec::new();
        for w in 0..n {
            if bfs.dist[w] == UNREACHED {
                continue;
            }
            if dist[w] > th.unicyclic_radius {
                return Err(DecompositionFailure::Condition2 {
                    cycle: c.clone(),
                    path: bfs.path_to(w).unwrap_or_default(),
                });
            }
            if !assigned[w] {
                members.push(w);
            }
        }
        for &w in &members {
            assigned[w] = true;
        }
        let block = Block::from_vertices(g, members).map_err(|e| structure("1", e.to_string()))?;
        blocks.push(block);
    }

    for u in 0..n {
        if assigned[u] || block_vertex[u] {
            continue;
        }
        let free = |w: usize| !block_vertex[w] && !assigned[w];
        let comp = g.bfs_restricted(&[u], free);
        let near = g.bfs_restricted(&[u], |_| true);
        for w in 0..n {
            if comp.dist[w] != UNREACHED && near.dist[w] >= th.tree_radius {
                return Err(DecompositionFailure::Condition3 { vertex: u, path: comp.path_to(w).unwrap_or_default() });
            }
        }
    }
    for u in 0..n {
        if assigned[u] || block_vertex[u] {
            continue;
        }
        let comp = g.bfs_restricted(&[u], |w| !block_vertex[w] && !assigned[w]);
        let members: Vec<usize> = (0..n).filter(|&w| comp.dist[w] != UNREACHED).collect();
        for &w in &members {
            assigned[w] = true;
        }
        blocks.push(Block::from_vertices(g, members).map_err(|e| structure("1", e.to_string()))?);
    }
    for v in 0..n {
        if !assigned[v] {
            blocks.push(Block::singleton(g, v));
        }
    }
    let mut dec = BlockPartition { epsilon: ctx.epsilon(), k, blocks, block_vertex };
    dec.sort();
    validate_decomposition(g, &dec, th)?;
    Ok(dec)
}

/// Structural conditions on a decomposition: connected blocks with at most
/// one extra edge, outer boundaries made of block vertices with a single
/// neighbour inside, short well-buffered cycles and block-vertex singletons.
pub fn validate_decomposition(
    g: &SparseGraph,
    dec: &Decomposition,
    th: &PartitionThresholds,
) -> Result<(), DecompositionFailure> {
    let n = g.n();
    if dec.block_vertex.len() != n {
        return Err(structure("cover", "block-vertex flags missing".into()));
    }
    let owner = dec.owner(n);
    if let Some(v) = owner.iter().position(|&o| o == UNREACHED) {
        return Err(structure("cover", format!("vertex {v} is in no block")));
    }
    if dec.blocks.iter().map(|b| b.len()).sum::<usize>() != n {
        return Err(structure("cover", "blocks overlap".into()));
    }
    for b in &dec.blocks {
        if !b.is_multi() {
            if !dec.block_vertex[b.vertices[0]] {
                return Err(structure("3", format!("singleton {} is not a block vertex", b.vertices[0])));
            }
            continue;
        }
        let mut member = vec![false; n];
        for &v in &b.vertices {
            member[v] = true;
        }
        for &x in &b.outer_boundary {
            if !dec.block_vertex[x] {
                return Err(structure("2a", format!("outer boundary vertex {x} is not a block vertex")));
            }
            let inside = g.neighbors(x).filter(|&y| member[y]).count();
            if inside != 1 {
                return Err(structure("2a", format!("outer boundary vertex {x} has {inside} neighbours inside")));
            }
        }
        if let Some(c) = &b.cycle {
            if c.len() > th.short_cycle {
                return Err(structure("2b", format!("cycle {c:?} longer than {}", th.short_cycle)));
            }
            if !b.outer_boundary.is_empty() {
                let dist = g.bfs(c).dist;
                let gap = b.outer_boundary.iter().map(|&x| dist[x]).min().unwrap();
                if gap < th.cycle_buffer {
                    return Err(structure("2c", format!("cycle {c:?} within {gap} of the outer boundary")));
                }
            }
        }
    }
    Ok(())
}

/// Merge a fine decomposition `fine` (accuracy ε, radius 0) and a coarse
/// one `coarse` (accuracy ζ, larger radius) into a block partition.
pub fn refine_to_partition(
    g: &SparseGraph,
    fine: &Decomposition,
    coarse: &Decomposition,
    buffer: usize,
) -> Result<BlockPartition> {
    let n = g.n();
    let fine_owner = fine.owner(n);
    let coarse_owner = coarse.owner(n);
    if fine_owner.contains(&UNREACHED) || coarse_owner.contains(&UNREACHED) {
        return Err(Error::Refinement("decompositions do not cover the graph".into()));
    }
    for (i, a) in fine.blocks.iter().enumerate().filter(|(_, a)| a.is_multi()) {
        let host = coarse_owner[a.vertices[0]];
        let b = &coarse.blocks[host];
        let inside = a.vertices.iter().all(|&v| coarse_owner[v] == host);
        let proper = a.len() < b.len() || b.outer_boundary.is_empty();
        if !b.is_multi() || !inside || !proper {
            return Err(Error::Refinement(format!(
                "fine block {i} {:?} is not strictly inside a coarse block",
                a.vertices
            )));
        }
    }

    let mut taken = vec![false; n];
    let mut blocks = Vec::new();
    for (bi, b) in coarse.blocks.iter().enumerate().filter(|(_, b)| b.is_multi()) {
        let in_b = |v: usize| coarse_owner[v] == bi;
        let collar = if b.outer_boundary.is_empty() { vec![UNREACHED; n] } else { g.bfs(&b.outer_boundary).dist };
        let in_q = |v: usize| in_b(v) && collar[v] <= buffer;

        let mut in_l = vec![false; n];
        let mut frontier: Vec<usize> = Vec::new();
        for a in fine.multi_blocks().filter(|a| in_b(a.vertices[0])) {
            for &v in &a.vertices {
                in_l[v] = true;
                frontier.push(v);
            }
        }
        if frontier.is_empty() {
            continue;
        }
        let mut queue: VecDeque<usize> = frontier.into_iter().collect();
        while let Some(v) = queue.pop_front() {
            for x in g.neighbors(v) {
                if !in_l[x] && in_b(x) && !in_q(x) {
                    in_l[x] = true;
                    queue.push_back(x);
                }
            }
        }
        let mut members: BTreeSet<usize> = (0..n).filter(|&v| in_l[v]).collect();
        let outer: Vec<usize> = members.iter().flat_map(|&v| g.neighbors(v)).filter(|&x| !in_l[x]).collect();
        members.extend(outer);
        if let Some(&v) = members.iter().find(|&&v| !in_b(v)) {
            return Err(Error::Refinement(format!("grown block leaves coarse block {bi} at vertex {v}")));
        }
        for &v in &members {
            taken[v] = true;
        }
        blocks.push(Block::from_vertices(g, members).map_err(|e| Error::Refinement(e.to_string()))?);
    }
    for v in 0..n {
        if !taken[v] {
            blocks.push(Block::singleton(g, v));
        }
    }
    let mut out = BlockPartition { epsilon: fine.epsilon, k: 0, blocks, block_vertex: fine.block_vertex.clone() };
    out.sort();
    Ok(out)
}

/// Outcome of one clause of the partition definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub passed: bool,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub clauses: Vec<ClauseCheck>,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|c| c.clause == name)
    }

    pub fn failed_clauses(&self) -> Vec<&str> {
        self.clauses.iter().filter(|c| !c.passed).map(|c| c.clause.as_str()).collect()
    }
}

impl fmt::Display for PartitionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            write!(f, "{}: {}", c.clause, if c.passed { "pass" } else { "FAIL" })?;
            if let Some(w) = c.witnesses.first() {
                write!(f, " ({w})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks every clause of the block-partition definition. Block vertices
/// are taken at radius 0 and range `th.path_range`; boundaries and kinds
/// are recomputed from the vertex sets rather than trusted.
pub fn validate_partition(ctx: &WeightContext, bp: &BlockPartition, th: &PartitionThresholds) -> PartitionReport {
    let g = ctx.model().graph();
    let n = g.n();
    let oracle = BlockVertexOracle::new(ctx, 0, th.path_range, th.verdict_budget);
    let mut verdicts: Vec<Option<bool>> = vec![None; n];
    let mut is_bv = |v: usize| *verdicts[v].get_or_insert_with(|| oracle.verdict(v).is_yes());

    let mut checks: Vec<(&str, Vec<String>)> =
        ["cover", "1", "2a", "2b", "2c", "3", "overlap"].iter().map(|&c| (c, Vec::new())).collect();
    let mut push = |clause: &str, w: String| {
        if let Some(entry) = checks.iter_mut().find(|(c, _)| *c == clause) {
            entry.1.push(w);
        }
    };

    let mut count = vec![0usize; n];
    for b in &bp.blocks {
        for &v in &b.vertices {
            if v >= n {
                push("cover", format!("vertex {v} out of range"));
            } else {
                count[v] += 1;
            }
        }
    }
    for (v, &c) in count.iter().enumerate() {
        if c != 1 {
            push("cover", format!("vertex {v} covered {c} times"));
        }
    }

    let mut on_boundary = vec![false; n];
    for b in &bp.blocks {
        let vertices: Vec<usize> = b.vertices.iter().copied().filter(|&v| v < n).collect();
        if vertices.is_empty() {
            continue;
        }
        if vertices.len() == 1 {
            if !is_bv(vertices[0]) {
                push("3", format!("singleton {} is not a block vertex", vertices[0]));
            }
            continue;
        }
        let mut member = vec![false; n];
        for &v in &vertices {
            member[v] = true;
        }
        let edges = g.edges_within(&member);
        let connected = g.induced_subgraph(&vertices).map(|s| s.graph.is_connected()).unwrap_or(false);
        if !connected || edges > vertices.len() {
            push("1", format!("block at {} has {edges} edges on {} vertices (connected: {connected})", vertices[0], vertices.len()));
            continue;
        }
        let (inner, outer) = boundaries(g, &member, &vertices);
        for &v in &inner {
            on_boundary[v] = true;
            if !is_bv(v) {
                push("2a", format!("inner boundary vertex {v} is not a block vertex"));
            }
            let inside = g.neighbors(v).filter(|&y| member[y]).count();
            if inside != 1 {
                push("2a", format!("inner boundary vertex {v} has {inside} neighbours inside"));
            }
        }
        if edges == vertices.len() {
            let sub = g.induced_subgraph(&vertices).expect("validated above");
            let cycle: Vec<usize> = match unique_cycle(&sub.graph) {
                Some(c) => c.iter().map(|&i| sub.vertices[i]).collect(),
                None => continue,
            };
            if cycle.len() > th.short_cycle {
                push("2b", format!("cycle of length {} in block at {}", cycle.len(), vertices[0]));
            }
            if !outer.is_empty() {
                let dist = g.bfs(&cycle).dist;
                let gap = outer.iter().map(|&x| dist[x]).min().unwrap();
                if gap < th.cycle_buffer {
                    push("2c", format!("cycle in block at {} lies {gap} from the outer boundary", vertices[0]));
                }
            }
        }
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if on_boundary[u] && on_boundary[v] {
            push("overlap", format!("edge {e} = ({u},{v}) joins two boundary vertices"));
        }
    }
    PartitionReport {
        clauses: checks
            .into_iter()
            .map(|(c, w)| ClauseCheck { clause: c.to_string(), passed: w.is_empty(), witnesses: w })
            .collect(),
    }
}

/// Matrices `J_S`, `J_H` with membership masks of `S`, `H` and `∂H`.
#[derive(Clone, Debug)]
pub struct PartitionMatrices {
    pub j_s: DMatrix<f64>,
    pub j_h: DMatrix<f64>,
    pub in_s: Vec<bool>,
    pub in_h: Vec<bool>,
    pub on_boundary: Vec<bool>,
}

impl PartitionMatrices {
    /// Entrywise `|J - J_S - J_H|`, nonzero exactly on edges inside `∂H`.
    pub fn identity_defect(&self, j: &DMatrix<f64>) -> f64 {
        (j - &self.j_s - &self.j_h).abs().max()
    }

    /// Convention when no partition exists: `S = ∅`, `J_S = 0`, `J_H = J`.
    pub fn without_partition(j: &DMatrix<f64>) -> Self {
        let n = j.nrows();
        Self {
            j_s: DMatrix::zeros(n, n),
            j_h: j.clone(),
            in_s: vec![false; n],
            in_h: vec![true; n],
            on_boundary: vec![false; n],
        }
    }
}

pub fn partition_matrices(j: &DMatrix<f64>, bp: &BlockPartition) -> Result<PartitionMatrices> {
    let n = j.nrows();
    if j.ncols() != n {
        return Err(Error::invalid("interaction matrix must be square"));
    }
    let mut in_h = vec![false; n];
    let mut on_boundary = vec![false; n];
    for b in bp.multi_blocks() {
        if let Some(&v) = b.vertices.iter().find(|&&v| v >= n) {
            return Err(Error::invalid(format!("vertex {v} out of range")));
        }
        for &v in &b.vertices {
            in_h[v] = true;
        }
        for &v in &b.inner_boundary {
            on_boundary[v] = true;
        }
    }
    let in_s: Vec<bool> = (0..n).map(|v| !in_h[v] || on_boundary[v]).collect();
    let j_s = DMatrix::from_fn(n, n, |u, w| if in_s[u] && in_s[w] { j[(u, w)] } else { 0.0 });
    let j_h = DMatrix::from_fn(n, n, |u, w| if in_h[u] && in_h[w] { j[(u, w)] } else { 0.0 });
    Ok(PartitionMatrices { j_s, j_h, in_s, in_h, on_boundary })
}

/// Stage at which the pipeline stopped, with its witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "stage", rename_all = "lowercase")]
pub enum PipelineFailure {
    Fine { failure: DecompositionFailure },
    Coarse { failure: DecompositionFailure },
    Refinement { message: String },
}

impl PipelineFailure {
    /// Short label: the decomposition tag, prefixed with `coarse-` for the
    /// coarse stage, or `refinement`.
    pub fn tag(&self) -> String {
        match self {
            PipelineFailure::Fine { failure } => failure.tag().to_string(),
            PipelineFailure::Coarse { failure } => format!("coarse-{}", failure.tag()),
            PipelineFailure::Refinement { .. } => "refinement".into(),
        }
    }

    /// Whether the failure names a concrete obstruction.
    pub fn has_witness(&self) -> bool {
        match self {
            PipelineFailure::Fine { failure } | PipelineFailure::Coarse { failure } => failure.has_witness(),
            PipelineFailure::Refinement { message } => !message.is_empty(),
        }
    }
}

impl fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineFailure::Fine { failure } => write!(f, "fine decomposition: {failure}"),
            PipelineFailure::Coarse { failure } => write!(f, "coarse decomposition: {failure}"),
            PipelineFailure::Refinement { message } => write!(f, "refinement: {message}"),
        }
    }
}

impl DecompositionFailure {
    pub fn has_witness(&self) -> bool {
        match self {
            DecompositionFailure::Condition1 { first, second, .. } => !first.is_empty() && !second.is_empty(),
            DecompositionFailure::Condition2 { path, .. } | DecompositionFailure::Condition3 { path, .. } => {
                path.len() >= 2
            }
            DecompositionFailure::Undetermined { .. } => true,
            DecompositionFailure::Structure { detail, .. } => !detail.is_empty(),
        }
    }
}

/// Everything produced by one run of the partition pipeline.
#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub thresholds: PartitionThresholds,
    pub partition: Result<BlockPartition, PipelineFailure>,
    pub report: Option<PartitionReport>,
}

impl PipelineOutcome {
    /// `"ok"`, `"invalid"` (built but failing validation) or `"fail"`.
    pub fn status(&self) -> &'static str {
        match (&self.partition, &self.report) {
            (Ok(_), Some(r)) if r.passed() => "ok",
            (Ok(_), _) => "invalid",
            (Err(_), _) => "fail",
        }
    }
}

/// Fine decomposition at (ε, 0), coarse at (ζ, radius), refinement, and
/// validation of the result.
pub fn partition_pipeline(ctx: &WeightContext, th: &PartitionThresholds) -> Result<PipelineOutcome> {
    let coarse_ctx = WeightContext::new(ctx.model(), zeta_for(ctx.epsilon()), ctx.d())?;
    let done = |partition, report| PipelineOutcome { thresholds: th.clone(), partition, report };
    let fine = match build_decomposition(ctx, 0, th) {
        Ok(x) => x,
        Err(failure) => return Ok(done(Err(PipelineFailure::Fine { failure }), None)),
    };
    let coarse = match build_decomposition(&coarse_ctx, th.refine_radius, th) {
        Ok(x) => x,
        Err(failure) => return Ok(done(Err(PipelineFailure::Coarse { failure }), None)),
    };
    match refine_to_partition(ctx.model().graph(), &fine, &coarse, th.refine_buffer) {
        Ok(bp) => {
            let report = validate_partition(ctx, &bp, th);
            Ok(done(Ok(bp), Some(report)))
        }
        Err(Error::Refinement(message)) => Ok(done(Err(PipelineFailure::Refinement { message }), None)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs_exact::GibbsModel;
    use crate::random_graph::CouplingMap;

    fn model(n: usize, edges: &[(usize, usize)], beta: f64) -> GibbsModel {
        let g = SparseGraph::from_edges(n, edges).unwrap();
        let c = CouplingMap::constant(&g, 1.0);
        GibbsModel::zero_field(g, c, beta).unwrap()
    }

    fn path_edges(n: usize) -> Vec<(usize, usize)> {
        (0..n - 1).map(|i| (i, i + 1)).collect()
    }

    fn loose(n: usize) -> PartitionThresholds {
        PartitionThresholds {
            path_range: 6,
            short_cycle: 4,
            cycle_separation: 3,
            unicyclic_radius: 4,
            tree_radius: 6,
            cycle_buffer: 1,
            refine_buffer: 1,
            refine_radius: 1,
            verdict_budget: 1_000_000 + n as u64,
        }
    }

    #[test]
    fn isolated_vertex_is_block_vertex() {
        let m = model(1, &[], 3.0);
        let ctx = WeightContext::new(&m, 0.2, 4.0).unwrap();
        assert!(is_block_vertex(&ctx, 0, 0, 10).is_yes());
    }

    #[test]
    fn strong_edge_fails_condition_b() {
        let d: f64 = 2000.0;
        let target = 2.0 * d.powf(-0.1);
        assert!(target < 1.0);
        let beta = target.atanh();
        let m = model(2, &[(0, 1)], beta);
        let ctx = WeightContext::new(&m, 0.2, d).unwrap();
        let v = is_block_vertex(&ctx, 0, 0, 3);
        assert_eq!(v.status, VerdictStatus::No);
        assert_eq!(v.failing, Some((BlockCondition::B, Witness::Edge(0))));
    }

    #[test]
    fn light_path_is_block_vertex() {
        let m = model(5, &path_edges(5), 0.1);
        let ctx = WeightContext::new(&m, 0.2, 4.0).unwrap();
        assert!((0..5).all(|v| ctx.is_light(v)));
        for u in 0..5 {
            let v = is_block_vertex(&ctx, u, 0, 5);
            assert!(v.is_yes(), "{u}: {v:?}");
        }
        assert!((0.95f64.powi(5) - 0.7737809374999999).abs() < 1e-15);
    }

    #[test]
    fn heavy_vertex_fails_condition_a() {
        let m = model(3, &path_edges(3), 1.5);
        let ctx = WeightContext::new(&m, 0.2, 1.2).unwrap();
        let v = is_block_vertex(&ctx, 0, 0, 3);
        assert_eq!(v.status, VerdictStatus::No);
        assert!(matches!(v.failing, Some((BlockCondition::A, Witness::Path(_)))));
    }

    #[test]
    fn budget_gives_undetermined() {
        let (m, d, eps) = star_instance();
        let ctx = WeightContext::new(&m, eps, d).unwrap();
        let v = BlockVertexOracle::new(&ctx, 0, 6, 0).verdict(2);
        assert_eq!(v.status, VerdictStatus::Undetermined);
        assert_eq!(BlockVertexOracle::new(&ctx, 0, 6, 1000).verdict(2).status, VerdictStatus::No);
    }

    #[test]
    fn short_cycles_found_once() {
        let tree = SparseGraph::from_edges(4, &[(0, 1), (1, 2), (1, 3)]).unwrap();
        assert!(find_short_cycles(&tree, 10).is_empty());
        let tri = SparseGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(find_short_cycles(&tri, 3), vec![vec![0, 1, 2]]);
        let two = SparseGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 5), (4, 5), (3, 4)]).unwrap();
        assert_eq!(find_short_cycles(&two, 3), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let k4 = SparseGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(find_short_cycles(&k4, 3).len(), 4);
        assert_eq!(find_short_cycles(&k4, 4).len(), 7);
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonical_cycle(vec![5, 2, 9, 3]), vec![2, 5, 3, 9]);
        assert_eq!(canonical_cycle(vec![3, 9, 2, 5]), vec![2, 5, 3, 9]);
    }

    #[test]
    fn zero_temperature_gives_singletons() {
        let m = model(6, &path_edges(6), 0.0);
        let ctx = WeightContext::new(&m, 0.2, 4.0).unwrap();
        let dec = build_decomposition(&ctx, 0, &loose(6)).unwrap();
        assert!(dec.blocks.iter().all(|b| !b.is_multi()));
        assert_eq!(dec.blocks.len(), 6);
    }

    #[test]
    fn close_triangles_fail_condition_one() {
        let edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)];
        let m = model(6, &edges, 0.0);
        let ctx = WeightContext::new(&m, 0.2, 4.0).unwrap();
        match build_decomposition(&ctx, 0, &loose(6)) {
            Err(DecompositionFailure::Condition1 { first, second, distance }) => {
                assert_eq!(first, vec![0, 1, 2]);
                assert_eq!(second, vec![3, 4, 5]);
                assert_eq!(distance, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    /// Ten vertices: a heavy star centred at 3 inside a light path 0..=6.
    fn star_instance() -> (GibbsModel, f64, f64) {
        let mut edges = path_edges(7);
        edges.extend([(3, 7), (3, 8), (3, 9)]);
        let g = SparseGraph::from_edges(10, &edges).unwrap();
        let strong = 0.45f64.atanh();
        let values = g.edges().iter().map(|&(u, v)| if u == 3 || v == 3 { strong } else { 0.1 }).collect();
        let c = CouplingMap::new(&g, values).unwrap();
        (GibbsModel::zero_field(g, c, 1.0).unwrap(), 1.5, 0.9)
    }

    #[test]
    fn heavy_star_becomes_tree_block() {
        let (m, d, eps) = star_instance();
        let ctx = WeightContext::new(&m, eps, d).unwrap();
        assert!(!ctx.is_light(3));
        let th = loose(10);
        let dec = build_decomposition(&ctx, 0, &th).unwrap();
        let multi: Vec<&Block> = dec.multi_blocks().collect();
        assert_eq!(multi.len(), 1);
        let b = multi[0];
        assert_eq!(b.kind, BlockKind::Tree);
        assert_eq!(b.vertices, vec![2, 3, 4, 7, 8, 9]);
        assert_eq!(b.outer_boundary, vec![1, 5]);
        for &x in &b.outer_boundary {
            assert!(dec.block_vertex[x]);
            assert_eq!(m.graph().neighbors(x).filter(|y| b.vertices.contains(y)).count(), 1);
        }
    }

    #[test]
    fn all_singletons_refine_to_singletons() {
        let m = model(5, &path_edges(5), 0.0);
        let g = m.graph();
        let d = BlockPartition::all_singletons(g, 0.2, 0);
        let e = BlockPartition::all_singletons(g, 0.2, 100);
        let out = refine_to_partition(g, &d, &e, 90).unwrap();
        assert!(out.blocks.iter().all(|b| !b.is_multi()));
        assert_eq!(out.blocks.len(), 5);
    }

    #[test]
    fn refinement_on_path() {
        let m = model(30, &path_edges(30), 0.0);
        let g = m.graph();
        let mut fine = BlockPartition::all_singletons(g, 0.2, 0);
        fine.blocks.retain(|b| !(14..=16).contains(&b.vertices[0]));
        fine.blocks.push(Block::from_vertices(g, 14..=16).unwrap());
        let mut coarse = BlockPartition::all_singletons(g, 0.2, 100);
        coarse.blocks.retain(|b| !(5..=25).contains(&b.vertices[0]));
        let big = Block::from_vertices(g, 5..=25).unwrap();
        coarse.blocks.push(big.clone());
        let out = refine_to_partition(g, &fine, &coarse, 3).unwrap();
        let k: Vec<&Block> = out.multi_blocks().collect();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].vertices, (7..=23).collect::<Vec<_>>());
        assert!(k[0].vertices.iter().all(|v| big.vertices.contains(v)));
        let collar = g.bfs(&big.outer_boundary).dist;
        assert!(k[0].inner_boundary.iter().all(|&v| collar[v] <= 3));
    }

    #[test]
    fn refinement_rejects_uncontained_block() {
        let m = model(6, &path_edges(6), 0.0);
        let g = m.graph();
        let mut fine = BlockPartition::all_singletons(g, 0.2, 0);
        fine.blocks.retain(|b| b.vertices[0] > 1);
        fine.blocks.push(Block::from_vertices(g, [0, 1]).unwrap());
        let coarse = BlockPartition::all_singletons(g, 0.2, 100);
        assert!(matches!(refine_to_partition(g, &fine, &coarse, 1), Err(Error::Refinement(_))));
    }

    #[test]
    fn validation_of_singletons_and_bad_boundary() {
        let m = model(4, &[(0, 1), (1, 2), (0, 2), (2, 3)], 0.0);
        let ctx = WeightContext::new(&m, 0.2, 4.0).unwrap();
        let th = loose(4);
        let bp = BlockPartition::all_singletons(m.graph(), 0.2, 0);
        assert!(validate_partition(&ctx, &bp, &th).passed());

        let g = m.graph();
        let mut bp2 = BlockPartition::all_singletons(g, 0.2, 0);
        bp2.blocks.retain(|b| b.vertices[0] > 2);
        bp2.blocks.push(Block::from_vertices(g, [0, 1, 2]).unwrap());
        let r = validate_partition(&ctx, &bp2, &th);
        assert!(!r.clause("2a").unwrap().passed, "{r}");
        assert!(r.clause("2a").unwrap().witnesses[0].contains("vertex 2"));
    }

    #[test]
    fn partition_matrices_extremes() {
        let m = model(4, &[(0, 1), (1, 2), (2, 3)], 1.0);
        let j = crate::random_graph::interaction_matrix(m.graph(), m.couplings()).to_dense();
        let singles = BlockPartition::all_singletons(m.graph(), 0.2, 0);
        let pm = partition_matrices(&j, &singles).unwrap();
        assert_eq!(pm.j_s, j);
        assert!(pm.j_h.iter().all(|&x| x == 0.0));
        let whole = BlockPartition {
            epsilon: 0.2,
            k: 0,
            blocks: vec![Block::from_vertices(m.graph(), 0..4).unwrap()],
            block_vertex: vec![],
        };
        assert!(whole.blocks[0].inner_boundary.is_empty());
        let pm = partition_matrices(&j, &whole).unwrap();
        assert!(pm.j_s.iter().all(|&x| x == 0.0));
        assert_eq!(pm.j_h, j);
        assert_eq!(pm.identity_defect(&j), 0.0);
        let none = PartitionMatrices::without_partition(&j);
        assert!(none.in_s.iter().all(|&s| !s));
    }

    #[test]
    fn partition_json_is_sorted() {
        let m = model(3, &[(0, 1)], 0.0);
        let mut bp = BlockPartition::all_singletons(m.graph(), 0.2, 0);
        bp.blocks.reverse();
        let v: serde_json::Value = serde_json::from_str(&bp.to_json().unwrap()).unwrap();
        let firsts: Vec<u64> = v["blocks"].as_array().unwrap().iter().map(|b| b["vertices"][0].as_u64().unwrap()).collect();
        assert_eq!(firsts, vec![0, 1, 2]);
        assert_eq!(v["blocks"][0]["kind"], "single");
    }

    #[test]
    fn thresholds_from_formulas() {
        let th = PartitionThresholds::from_formulas(200, 8.0, 0.2).unwrap();
        assert_eq!(th.path_range, 6);
        assert_eq!(th.short_cycle, 2);
        assert_eq!(th.cycle_separation, 3);
        assert_eq!(th.tree_radius, 5);
        assert_eq!(th.cycle_buffer, 1251);
        assert!(PartitionThresholds::from_formulas(200, 1.0, 0.2).is_err());
    }
}
