//! Sparse undirected graphs, Erdős–Rényi and Galton–Watson samplers, and
//! edge couplings.

use std::collections::VecDeque;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::SparseSymMatrix;
use crate::{Error, Result};

pub type EdgeId = usize;

pub const UNREACHED: usize = usize::MAX;

/// Simple undirected graph on `0..n`. Edges are stored as `(u, v)` with
/// `u < v`, sorted, and their index in that order is the edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, EdgeId)>>,
}

/// Breadth-first search result with parent pointers.
#[derive(Clone, Debug)]
pub struct Bfs {
    pub dist: Vec<usize>,
    pub parent: Vec<usize>,
}

impl Bfs {
    /// Vertices from the nearest source to `v`, or `None` if unreached.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        if self.dist[v] == UNREACHED {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while self.dist[cur] > 0 {
            cur = self.parent[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

/// Induced subgraph with maps back to the parent graph.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: SparseGraph,
    /// Local vertex index to parent vertex.
    pub vertices: Vec<usize>,
    /// Local edge id to parent edge id.
    pub edges: Vec<EdgeId>,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut list = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate edge {:?}", w[0])));
        }
        let mut adj = vec![Vec::new(); n];
        for (id, &(u, v)) in list.iter().enumerate() {
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Self { n, edges: list, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (usize, usize) {
        self.edges[e]
    }

    /// `(neighbour, edge id)` pairs sorted by neighbour.
    pub fn incident(&self, v: usize) -> &[(usize, EdgeId)] {
        &self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|&(w, _)| w)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<EdgeId> {
        let list = self.adj.get(u)?;
        list.binary_search_by_key(&v, |&(w, _)| w).ok().map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_id(u, v).is_some()
    }

    /// Multi-source BFS; `allowed` restricts which vertices may be entered.
    pub fn bfs_restricted(&self, sources: &[usize], allowed: impl Fn(usize) -> bool) -> Bfs {
        let mut dist = vec![UNREACHED; self.n];
        let mut parent = vec![UNREACHED; self.n];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] == UNREACHED {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if dist[w] == UNREACHED && allowed(w) {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        Bfs { dist, parent }
    }

    pub fn bfs(&self, sources: &[usize]) -> Bfs {
        self.bfs_restricted(sources, |_| true)
    }

    /// Vertices within distance `radius` of `v`.
    pub fn ball(&self, v: usize, radius: usize) -> Vec<usize> {
        let mut dist = vec![UNREACHED; self.n];
        let mut out = vec![v];
        dist[v] = 0;
        let mut head = 0;
        while head < out.len() {
            let x = out[head];
            head += 1;
            if dist[x] == radius {
                continue;
            }
            for &(w, _) in &self.adj[x] {
                if dist[w] == UNREACHED {
                    dist[w] = dist[x] + 1;
                    out.push(w);
                }
            }
        }
        out
    }

    /// Component label per vertex, labels numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![UNREACHED; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if label[s] != UNREACHED {
                continue;
            }
            let b = self.bfs_restricted(&[s], |_| true);
            for v in 0..self.n {
                if b.dist[v] != UNREACHED {
                    label[v] = next;
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.bfs(&[0]).dist.iter().all(|&d| d != UNREACHED)
    }

    /// Number of edges with both ends in `members`.
    pub fn edges_within(&self, members: &[bool]) -> usize {
        self.edges.iter().filter(|&&(u, v)| members[u] && members[v]).count()
    }

    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Subgraph> {
        let mut local = vec![UNREACHED; self.n];
        let mut sorted = vertices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for (i, &v) in sorted.iter().enumerate() {
            if v >= self.n {
                return Err(Error::invalid(format!("vertex {v} out of range")));
            }
            local[v] = i;
        }
        let mut edges = Vec::new();
        let mut ids = Vec::new();
        for (id, &(u, v)) in self.edges.iter().enumerate() {
            if local[u] != UNREACHED && local[v] != UNREACHED {
                edges.push((local[u], local[v]));
                ids.push(id);
            }
        }
        let graph = SparseGraph::from_edges(sorted.len(), &edges)?;
        Ok(Subgraph { graph, vertices: sorted, edges: ids })
    }
}

/// Samples G(n, d/n) by visiting pairs `(u, v)`, `u < v`, in lexicographic order.
pub fn sample_gnp<R: Rng + ?Sized>(n: usize, d: f64, rng: &mut R) -> Result<SparseGraph> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("average degree {d} must be finite and non-negative")));
    }
    if n == 0 {
        return Ok(SparseGraph::empty(0));
    }
    let p = d / n as f64;
    if p > 1.0 {
        return Err(Error::invalid(format!("edge probability d/n = {p} exceeds 1")));
    }
    let mut edges = Vec::new();
    if p > 0.0 {
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
    }
    SparseGraph::from_edges(n, &edges)
}

/// Galton–Watson tree with Poisson(d) offspring, truncated at `depth`.
/// Root is 0 and every parent is numbered before its children.
pub fn sample_gw_tree<R: Rng + ?Sized>(d: f64, depth: usize, rng: &mut R) -> Result<SparseGraph> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("offspring mean {d} must be finite and non-negative")));
    }
    let poisson = if d > 0.0 { Some(Poisson::new(d).map_err(|e| Error::invalid(e.to_string()))?) } else { None };
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut count = 1usize;
    for _ in 0..depth {
        let mut next = Vec::new();
        for &p in &frontier {
            let k = poisson.as_ref().map_or(0, |dist| dist.sample(rng) as usize);
            for _ in 0..k {
                edges.push((p, count));
                next.push(count);
                count += 1;
            }
        }
        frontier = next;
    }
    SparseGraph::from_edges(count, &edges)
}

/// Distribution of edge couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingDist {
    Gaussian,
    Rademacher,
    /// Standard Gaussian conditioned on `|J| < bound`.
    TruncatedGaussian { bound: f64 },
    Constant { value: f64 },
}

impl FromStr for CouplingDist {
    type Err = Error;

    /// Accepts `gaussian`, `rademacher`, `truncated:<bound>` and `constant:<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, arg) = match s.split_once(':') {
            Some((t, a)) => (t, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::invalid(format!("coupling tag `{tag}` needs a value")))?
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("coupling value: {e}")))
        };
        match tag {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "truncated" => {
                let bound = num(arg)?;
                if !(bound > 0.0) {
                    return Err(Error::invalid("truncation bound must be positive"));
                }
                Ok(Self::TruncatedGaussian { bound })
            }
            "constant" => Ok(Self::Constant { value: num(arg)? }),
            other => Err(Error::invalid(format!("unknown coupling distribution `{other}`"))),
        }
    }
}

impl CouplingDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian => StandardNormal.sample(rng),
            Self::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::TruncatedGaussian { bound } => sample_truncated(bound, rng),
            Self::Constant { value } => value,
        }
    }
}

fn sample_truncated<R: Rng + ?Sized>(bound: f64, rng: &mut R) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let lo = normal.cdf(-bound);
    let hi = normal.cdf(bound);
    loop {
        let u = lo + (hi - lo) * rng.gen::<f64>();
        let x = normal.inverse_cdf(u);
        if x.is_finite() && x.abs() < bound {
            return x;
        }
    }
}

/// One coupling per edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMap {
    values: Vec<f64>,
}

impl CouplingMap {
    pub fn new(g: &SparseGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.m() {
            return Err(Error::invalid(format!("{} couplings for {} edges", values.len(), g.m())));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        Ok(Self { values })
    }

    pub fn constant(g: &SparseGraph, value: f64) -> Self {
        Self { values: vec![value; g.m()] }
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.values[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Restriction to a subgraph via its parent edge ids.
    pub fn restrict(&self, sub: &Subgraph) -> Self {
        Self { values: sub.edges.iter().map(|&e| self.values[e]).collect() }
    }
}

pub fn couplings_sample<R: Rng + ?Sized>(g: &SparseGraph, dist: CouplingDist, rng: &mut R) -> CouplingMap {
    CouplingMap { values: (0..g.m()).map(|_| dist.sample(rng)).collect() }
}

/// Symmetric interaction matrix with `J[u][v] = J[v][u] = J_e` and zero diagonal.
pub fn interaction_matrix(g: &SparseGraph, c: &CouplingMap) -> SparseSymMatrix {
    SparseSymMatrix {
        n: g.n(),
        upper: g.edges().iter().zip(c.values()).map(|(&(u, v), &j)| (u, v, j)).collect(),
        diagonal: vec![0.0; g.n()],
    }
}

/// JSON form `{"n": .., "edges": [[u, v, J], ..]}` with edges in id order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphDump {
    pub fn new(g: &SparseGraph, c: &CouplingMap) -> Self {
        Self {
            n: g.n(),
            edges: g.edges().iter().zip(c.values()).map(|(&(u, v), &j)| (u, v, j)).collect(),
        }
    }

    pub fn into_parts(self) -> Result<(SparseGraph, CouplingMap)> {
        let mut items = self.edges;
        for e in &mut items {
            if e.0 > e.1 {
                *e = (e.1, e.0, e.2);
            }
        }
        items.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let pairs: Vec<_> = items.iter().map(|e| (e.0, e.1)).collect();
        let g = SparseGraph::from_edges(self.n, &pairs)?;
        let c = CouplingMap::new(&g, items.iter().map(|e| e.2).collect())?;
        Ok((g, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn edge_ids_follow_sorted_order() {
        let g = SparseGraph::from_edges(4, &[(2, 1), (0, 3), (0, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2)]);
        assert_eq!(g.edge_id(3, 0), Some(1));
        assert_eq!(g.edge_id(2, 3), None);
        assert!(SparseGraph::from_edges(2, &[(0, 1), (1, 0)]).is_err());
        assert!(SparseGraph::from_edges(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn degenerate_gnp() {
        let mut r = stream_rng(1, 0);
        assert_eq!(sample_gnp(0, 3.0, &mut r).unwrap().n(), 0);
        assert_eq!(sample_gnp(30, 0.0, &mut r).unwrap().m(), 0);
        assert!(sample_gnp(3, 4.0, &mut r).is_err());
        assert!(sample_gnp(3, -1.0, &mut r).is_err());
        let k = sample_gnp(5, 5.0, &mut r).unwrap();
        assert_eq!(k.m(), 10);
    }

    #[test]
    fn gnp_is_seed_reproducible() {
        let a = sample_gnp(60, 3.0, &mut stream_rng(5, 2)).unwrap();
        let b = sample_gnp(60, 3.0, &mut stream_rng(5, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gw_tree_is_a_tree_with_parents_first() {
        let t = sample_gw_tree(2.5, 5, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(t.m() + 1, t.n());
        assert!(t.is_connected());
        for &(u, v) in t.edges() {
            assert!(u < v);
        }
        assert_eq!(sample_gw_tree(0.0, 4, &mut stream_rng(3, 0)).unwrap().n(), 1);
    }

    #[test]
    fn coupling_tags_parse() {
        assert_eq!("gaussian".parse::<CouplingDist>().unwrap(), CouplingDist::Gaussian);
        assert_eq!(
            "truncated:0.5".parse::<CouplingDist>().unwrap(),
            CouplingDist::TruncatedGaussian { bound: 0.5 }
        );
        assert!("cauchy".parse::<CouplingDist>().is_err());
        assert!("truncated".parse::<CouplingDist>().is_err());
    }

    #[test]
    fn truncated_respects_bound() {
        let mut r = stream_rng(9, 0);
        let d = CouplingDist::TruncatedGaussian { bound: 0.3 };
        for _ in 0..2000 {
            assert!(d.sample(&mut r).abs() < 0.3);
        }
    }

    #[test]
    fn dump_round_trips() {
        let mut r = stream_rng(4, 0);
        let g = sample_gnp(25, 3.0, &mut r).unwrap();
        let c = couplings_sample(&g, CouplingDist::Gaussian, &mut r);
        let text = serde_json::to_string(&GraphDump::new(&g, &c)).unwrap();
        let (g2, c2) = serde_json::from_str::<GraphDump>(&text).unwrap().into_parts().unwrap();
        assert_eq!(g, g2);
        assert_eq!(c, c2);
    }

    #[test]
    fn induced_subgraph_maps_back() {
        let g = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let s = g.induced_subgraph(&[3, 1, 2]).unwrap();
        assert_eq!(s.vertices, vec![1, 2, 3]);
        assert_eq!(s.graph.edges(), &[(0, 1), (1, 2)]);
        for (le, &pe) in s.edges.iter().enumerate() {
            let (a, b) = s.graph.edge(le);
            assert_eq!(g.edge(pe), (s.vertices[a], s.vertices[b]));
        }
    }
}
