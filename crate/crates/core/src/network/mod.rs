//! Per-round topologies, graph families, weight induction for asynchronous
//! single transfer, and the cut metrics γ, h and λ.

mod flow;
mod metrics;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NetworkError;

pub use metrics::{
    conductance_lambda, conductance_lambda_family, isoperimetric_h, isoperimetric_h_family, min_cut_gamma,
    min_cut_gamma_brute_force, min_cut_gamma_max_flow, CutMetric, EXACT_LIMIT,
};
pub use parse::{parse_edge_list, read_edge_list, to_edge_list};

/// A graph on `n` nodes for one round. Immutable once built.
///
/// Undirected edges are stored with `u < v`. Weights, when present, are exact
/// rationals aligned with the edge lists.
#[derive(Debug, Clone)]
pub struct Topology {
    n: usize,
    directed: Vec<(usize, usize)>,
    undirected: Vec<(usize, usize)>,
    weights: Option<EdgeWeights>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    nbr_adj: Vec<Vec<usize>>,
    sampler: OnceLock<Option<EdgeSampler>>,
}

/// Cumulative edge probabilities for drawing the single active edge of a round.
#[derive(Debug, Clone)]
pub struct EdgeSampler {
    edges: Vec<WeightedEdge>,
    cumulative: Vec<f64>,
}

impl EdgeSampler {
    /// Maps a uniform `u` in `[0, 1)` to an edge, or `None` for the idle mass `1 - Σ p_e`.
    pub fn pick(&self, u: f64) -> Option<WeightedEdge> {
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.edges.get(i).copied()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeWeights {
    pub directed: Vec<BigRational>,
    pub undirected: Vec<BigRational>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.directed == other.directed
            && self.undirected == other.undirected
            && self.weights == other.weights
    }
}

impl Eq for Topology {}

/// One selectable edge of a weighted topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightedEdge {
    Directed(usize, usize),
    Undirected(usize, usize),
}

impl Topology {
    pub fn new(
        n: usize,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, NetworkError> {
        let mut d: Vec<(usize, usize)> = directed.into_iter().collect();
        let mut u: Vec<(usize, usize)> = undirected.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        for &(a, b) in d.iter().chain(&u) {
            if a == b || a >= n || b >= n {
                return Err(NetworkError::InvalidEdge(a, b));
            }
        }
        d.sort_unstable();
        d.dedup();
        u.sort_unstable();
        u.dedup();
        Ok(Self::assemble(n, d, u, None))
    }

    pub fn undirected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, NetworkError> {
        Self::new(n, std::iter::empty(), edges)
    }

    pub fn directed(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, NetworkError> {
        Self::new(n, edges, std::iter::empty())
    }

    pub fn empty(n: usize) -> Self {
        Self::assemble(n, Vec::new(), Vec::new(), None)
    }

    /// Builds a weighted topology. Every weight must be positive and the total
    /// mass at most 1. Duplicate edges are merged by summing their weights.
    pub fn weighted(
        n: usize,
        directed: impl IntoIterator<Item = (usize, usize, BigRational)>,
        undirected: impl IntoIterator<Item = (usize, usize, BigRational)>,
    ) -> Result<Self, NetworkError> {
        let t = Self::weighted_unchecked(n, directed, undirected)?;
        if t.total_weight().expect("weighted") > BigRational::one() {
            return Err(NetworkError::InvalidWeight("total edge mass exceeds 1".into()));
        }
        Ok(t)
    }

    fn weighted_unchecked(
        n: usize,
        directed: impl IntoIterator<Item = (usize, usize, BigRational)>,
        undirected: impl IntoIterator<Item = (usize, usize, BigRational)>,
    ) -> Result<Self, NetworkError> {
        let mut dm: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        let mut um: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for (a, b, w) in directed {
            check_weighted_edge(n, a, b, &w)?;
            *dm.entry((a, b)).or_insert_with(BigRational::zero) += w;
        }
        for (a, b, w) in undirected {
            check_weighted_edge(n, a, b, &w)?;
            *um.entry((a.min(b), a.max(b))).or_insert_with(BigRational::zero) += w;
        }
        let (d, dw): (Vec<_>, Vec<_>) = dm.into_iter().unzip();
        let (u, uw): (Vec<_>, Vec<_>) = um.into_iter().unzip();
        Ok(Self::assemble(n, d, u, Some(EdgeWeights { directed: dw, undirected: uw })))
    }

    fn assemble(
        n: usize,
        directed: Vec<(usize, usize)>,
        undirected: Vec<(usize, usize)>,
        weights: Option<EdgeWeights>,
    ) -> Self {
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(a, b) in &directed {
            out_adj[a].push(b);
            in_adj[b].push(a);
        }
        for &(a, b) in &undirected {
            out_adj[a].push(b);
            out_adj[b].push(a);
            in_adj[a].push(b);
            in_adj[b].push(a);
        }
        let mut nbr_adj = vec![Vec::new(); n];
        for v in 0..n {
            out_adj[v].sort_unstable();
            out_adj[v].dedup();
            in_adj[v].sort_unstable();
            in_adj[v].dedup();
            let mut all: Vec<usize> = out_adj[v].iter().chain(&in_adj[v]).copied().collect();
            all.sort_unstable();
            all.dedup();
            nbr_adj[v] = all;
        }
        Topology { n, directed, undirected, weights, out_adj, in_adj, nbr_adj, sampler: OnceLock::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed_edges(&self) -> &[(usize, usize)] {
        &self.directed
    }

    pub fn undirected_edges(&self) -> &[(usize, usize)] {
        &self.undirected
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    pub fn weights(&self) -> Option<&EdgeWeights> {
        self.weights.as_ref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn is_undirected(&self) -> bool {
        self.directed.is_empty()
    }

    /// Nodes `v` can send to (directed out-edges plus undirected edges).
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    /// Nodes `v` can receive from.
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    /// Union of in- and out-neighbors.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.nbr_adj[v]
    }

    pub fn total_weight(&self) -> Option<BigRational> {
        self.weights.as_ref().map(|w| w.directed.iter().chain(&w.undirected).sum())
    }

    /// True when a weighted union pushed the total mass above 1.
    pub fn is_overweight(&self) -> bool {
        self.total_weight().is_some_and(|w| w > BigRational::one())
    }

    /// Selectable edges with their probabilities as floats, in storage order.
    pub fn weighted_edges_f64(&self) -> Option<Vec<(WeightedEdge, f64)>> {
        let w = self.weights.as_ref()?;
        let mut out = Vec::with_capacity(self.edge_count());
        for (&(a, b), p) in self.directed.iter().zip(&w.directed) {
            out.push((WeightedEdge::Directed(a, b), p.to_f64().unwrap_or(0.0)));
        }
        for (&(a, b), p) in self.undirected.iter().zip(&w.undirected) {
            out.push((WeightedEdge::Undirected(a, b), p.to_f64().unwrap_or(0.0)));
        }
        Some(out)
    }

    /// Sampler over the weighted edges; `None` for unweighted topologies.
    pub fn edge_sampler(&self) -> Option<&EdgeSampler> {
        self.sampler
            .get_or_init(|| {
                let weighted = self.weighted_edges_f64()?;
                let mut acc = 0.0;
                let (edges, cumulative) = weighted
                    .into_iter()
                    .map(|(e, p)| {
                        acc += p;
                        (e, acc)
                    })
                    .unzip();
                Some(EdgeSampler { edges, cumulative })
            })
            .as_ref()
    }

    /// Arcs for cut computations: undirected edges become two opposite arcs
    /// carrying the full edge weight each.
    pub(crate) fn weighted_arcs(&self) -> Option<Vec<(usize, usize, BigRational)>> {
        let w = self.weights.as_ref()?;
        let mut arcs = Vec::with_capacity(self.directed.len() + 2 * self.undirected.len());
        for (&(a, b), p) in self.directed.iter().zip(&w.directed) {
            arcs.push((a, b, p.clone()));
        }
        for (&(a, b), p) in self.undirected.iter().zip(&w.undirected) {
            arcs.push((a, b, p.clone()));
            arcs.push((b, a, p.clone()));
        }
        Some(arcs)
    }

    /// Drops the weights.
    pub fn unweighted(&self) -> Topology {
        Self::assemble(self.n, self.directed.clone(), self.undirected.clone(), None)
    }

    /// Whether every node can reach every other node along out-edges.
    pub fn is_strongly_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let reach = |adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reach(&self.out_adj) && reach(&self.in_adj)
    }

    /// Longest shortest path along out-edges, or `None` if not strongly connected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for s in 0..self.n {
            let mut dist = vec![usize::MAX; self.n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &u in &self.out_adj[v] {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        queue.push_back(u);
                    }
                }
            }
            for &d in &dist {
                if d == usize::MAX {
                    return None;
                }
                best = best.max(d);
            }
        }
        Some(best)
    }
}

fn check_weighted_edge(n: usize, a: usize, b: usize, w: &BigRational) -> Result<(), NetworkError> {
    if a == b || a >= n || b >= n {
        return Err(NetworkError::InvalidEdge(a, b));
    }
    if *w <= BigRational::zero() {
        return Err(NetworkError::InvalidWeight(format!("p_e = {w} on ({a}, {b}) must be positive")));
    }
    Ok(())
}

/// How an undirected graph is turned into single-transfer edge probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InduceModel {
    Push,
    Pull,
    Exchange,
}

impl fmt::Display for InduceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InduceModel::Push => "push",
            InduceModel::Pull => "pull",
            InduceModel::Exchange => "exchange",
        })
    }
}

/// Edge probabilities for asynchronous single transfer: a uniformly random
/// node (probability `1/n`) contacts a uniformly random neighbor.
pub fn induce_weighted(base: &Topology, model: InduceModel) -> Result<Topology, NetworkError> {
    if !base.is_undirected() {
        return Err(NetworkError::DirectedInput);
    }
    if base.n == 0 {
        return Err(NetworkError::EmptyGraph);
    }
    let degree: Vec<usize> = (0..base.n).map(|v| base.neighbors(v).len()).collect();
    if let Some(v) = degree.iter().position(|&d| d == 0) {
        return Err(NetworkError::IsolatedVertex(v));
    }
    let n = BigInt::from(base.n);
    let share = |v: usize| BigRational::new(BigInt::one(), &n * BigInt::from(degree[v]));
    let edges = base.undirected.iter().copied();
    match model {
        InduceModel::Push => Topology::weighted(
            base.n,
            edges.flat_map(|(a, b)| [(a, b, share(a)), (b, a, share(b))]),
            std::iter::empty(),
        ),
        InduceModel::Pull => Topology::weighted(
            base.n,
            edges.flat_map(|(a, b)| [(a, b, share(b)), (b, a, share(a))]),
            std::iter::empty(),
        ),
        InduceModel::Exchange => {
            Topology::weighted(base.n, std::iter::empty(), edges.map(|(a, b)| (a, b, share(a) + share(b))))
        }
    }
}

/// Edge union of graphs on the same node set. Weights are summed per edge
/// without renormalization; check [`Topology::is_overweight`] afterwards.
pub fn union_graph(graphs: &[Topology]) -> Result<Topology, NetworkError> {
    let Some(first) = graphs.first() else {
        return Err(NetworkError::EmptyGraph);
    };
    let n = first.n;
    if let Some(g) = graphs.iter().find(|g| g.n != n) {
        return Err(NetworkError::SizeMismatch(n, g.n));
    }
    let weighted = graphs.iter().all(|g| g.is_weighted() || g.edge_count() == 0) && graphs.iter().any(|g| g.is_weighted());
    if weighted {
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for g in graphs.iter().filter(|g| g.is_weighted()) {
            let w = g.weights.as_ref().expect("weighted");
            directed.extend(g.directed.iter().zip(&w.directed).map(|(&(a, b), p)| (a, b, p.clone())));
            undirected.extend(g.undirected.iter().zip(&w.undirected).map(|(&(a, b), p)| (a, b, p.clone())));
        }
        Topology::weighted_unchecked(n, directed, undirected)
    } else {
        Topology::new(
            n,
            graphs.iter().flat_map(|g| g.directed.iter().copied()),
            graphs.iter().flat_map(|g| g.undirected.iter().copied()),
        )
    }
}

/// Catalog of graph families used by scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    Complete,
    Ring,
    Line,
    /// Node 0 is the center.
    Star,
    /// Requires `n` to be a power of two.
    Hypercube,
    /// Two cliques of `clique_size` nodes (`n = 2 * clique_size`) joined by one edge.
    Barbell { clique_size: usize },
    /// Cliques on `0..left` and `left..n` joined by the edge `(0, left)`.
    TwoCliquesBridged { left: usize },
    Explicit { edges: Vec<(usize, usize)> },
    RandomGnp { p: f64 },
    RandomMatching,
}

impl GraphFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::Complete => "complete",
            GraphFamily::Ring => "ring",
            GraphFamily::Line => "line",
            GraphFamily::Star => "star",
            GraphFamily::Hypercube => "hypercube",
            GraphFamily::Barbell { .. } => "barbell",
            GraphFamily::TwoCliquesBridged { .. } => "two_cliques_bridged",
            GraphFamily::Explicit { .. } => "explicit",
            GraphFamily::RandomGnp { .. } => "random_gnp",
            GraphFamily::RandomMatching => "random_matching",
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, GraphFamily::RandomGnp { .. } | GraphFamily::RandomMatching)
    }

    /// Builds an undirected instance on `n` nodes. Random families draw from `rng`.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Topology, NetworkError> {
        let bad = |msg: String| Err(NetworkError::InvalidFamily(msg));
        match self {
            GraphFamily::Complete => Topology::undirected(n, complete_edges(0, n)),
            GraphFamily::Ring => {
                if n < 3 {
                    return bad(format!("ring needs n >= 3, got {n}"));
                }
                Topology::undirected(n, (0..n).map(|i| (i, (i + 1) % n)))
            }
            GraphFamily::Line => Topology::undirected(n, (1..n).map(|i| (i - 1, i))),
            GraphFamily::Star => Topology::undirected(n, (1..n).map(|i| (0, i))),
            GraphFamily::Hypercube => {
                if n == 0 || !n.is_power_of_two() {
                    return bad(format!("hypercube needs a power of two, got {n}"));
                }
                let d = n.trailing_zeros();
                Topology::undirected(
                    n,
                    (0..n).flat_map(|v| (0..d).map(move |b| (v, v ^ (1 << b)))).filter(|&(a, b)| a < b),
                )
            }
            GraphFamily::Barbell { clique_size } => {
                if *clique_size == 0 || n != 2 * clique_size {
                    return bad(format!("barbell({clique_size}) needs n = {}, got {n}", 2 * clique_size));
                }
                GraphFamily::TwoCliquesBridged { left: *clique_size }.generate(n, rng)
            }
            GraphFamily::TwoCliquesBridged { left } => {
                if *left == 0 || *left >= n {
                    return bad(format!("left clique size {left} must be in 1..{n}"));
                }
                Topology::undirected(n, two_cliques_edges(&(0..*left).collect::<Vec<_>>(), &(*left..n).collect::<Vec<_>>()))
            }
            GraphFamily::Explicit { edges } => Topology::undirected(n, edges.iter().copied()),
            GraphFamily::RandomGnp { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("gnp probability {p} outside [0, 1]"));
                }
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in (a + 1)..n {
                        if rng.gen_bool(*p) {
                            edges.push((a, b));
                        }
                    }
                }
                Topology::undirected(n, edges)
            }
            GraphFamily::RandomMatching => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(rng);
                Topology::undirected(n, order.chunks_exact(2).map(|c| (c[0], c[1])))
            }
        }
    }
}

fn complete_edges(lo: usize, hi: usize) -> Vec<(usize, usize)> {
    (lo..hi).flat_map(|a| ((a + 1)..hi).map(move |b| (a, b))).collect()
}

/// Cliques on both node lists plus one edge between their first entries.
pub(crate) fn two_cliques_edges(left: &[usize], right: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for side in [left, right] {
        for (i, &a) in side.iter().enumerate() {
            for &b in &side[i + 1..] {
                edges.push((a, b));
            }
        }
    }
    if let (Some(&a), Some(&b)) = (left.first(), right.first()) {
        edges.push((a, b));
    }
    edges
}

pub(crate) fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert_eq!(Topology::undirected(3, [(1, 1)]), Err(NetworkError::InvalidEdge(1, 1)));
        assert_eq!(Topology::directed(3, [(0, 3)]), Err(NetworkError::InvalidEdge(0, 3)));
        assert!(Topology::weighted(2, [(0, 1, ratio(0, 1))], []).is_err());
        assert!(Topology::weighted(3, [(0, 1, ratio(2, 3)), (1, 2, ratio(2, 3))], []).is_err());
    }

    #[test]
    fn family_shapes() {
        let mut r = rng();
        let k8 = GraphFamily::Complete.generate(8, &mut r).unwrap();
        assert_eq!(k8.edge_count(), 28);
        let ring = GraphFamily::Ring.generate(8, &mut r).unwrap();
        assert!((0..8).all(|v| ring.neighbors(v).len() == 2));
        let cube = GraphFamily::Hypercube.generate(16, &mut r).unwrap();
        assert_eq!(cube.edge_count(), 32);
        assert!((0..16).all(|v| cube.neighbors(v).len() == 4));
        let star = GraphFamily::Star.generate(5, &mut r).unwrap();
        assert_eq!(star.neighbors(0).len(), 4);
        let bar = GraphFamily::Barbell { clique_size: 4 }.generate(8, &mut r).unwrap();
        assert_eq!(bar.edge_count(), 6 + 6 + 1);
        assert!(GraphFamily::Barbell { clique_size: 4 }.generate(9, &mut r).is_err());
        let m = GraphFamily::RandomMatching.generate(8, &mut r).unwrap();
        assert_eq!(m.edge_count(), 4);
        assert!((0..8).all(|v| m.neighbors(v).len() == 1));
        assert_eq!(GraphFamily::Line.generate(5, &mut r).unwrap().diameter(), Some(4));
        assert!(GraphFamily::Hypercube.generate(12, &mut r).is_err());
    }

    #[test]
    fn induce_examples() {
        let mut r = rng();
        let k4 = GraphFamily::Complete.generate(4, &mut r).unwrap();
        let push = induce_weighted(&k4, InduceModel::Push).unwrap();
        assert_eq!(push.directed_edges().len(), 12);
        assert!(push.weights().unwrap().directed.iter().all(|w| *w == ratio(1, 12)));
        assert_eq!(push.total_weight().unwrap(), ratio(1, 1));

        let star = GraphFamily::Star.generate(4, &mut r).unwrap();
        let push = induce_weighted(&star, InduceModel::Push).unwrap();
        for (&(a, b), w) in push.directed_edges().iter().zip(&push.weights().unwrap().directed) {
            if b == 0 {
                assert_eq!(*w, ratio(1, 4), "leaf {a} -> center");
            } else {
                assert_eq!(*w, ratio(1, 12), "center -> leaf {b}");
            }
        }
        let pull = induce_weighted(&star, InduceModel::Pull).unwrap();
        assert_eq!(pull.total_weight().unwrap(), ratio(1, 1));

        let k2 = GraphFamily::Complete.generate(2, &mut r).unwrap();
        let ex = induce_weighted(&k2, InduceModel::Exchange).unwrap();
        assert_eq!(ex.weights().unwrap().undirected, vec![ratio(1, 1)]);

        let isolated = Topology::undirected(3, [(0, 1)]).unwrap();
        assert_eq!(induce_weighted(&isolated, InduceModel::Push), Err(NetworkError::IsolatedVertex(2)));
        let directed = Topology::directed(2, [(0, 1)]).unwrap();
        assert_eq!(induce_weighted(&directed, InduceModel::Push), Err(NetworkError::DirectedInput));
    }

    #[test]
    fn induced_mass_is_exactly_one() {
        let mut r = rng();
        for n in 2..14 {
            for fam in [GraphFamily::Complete, GraphFamily::Star, GraphFamily::Line, GraphFamily::RandomGnp { p: 0.6 }] {
                let g = fam.generate(n, &mut r).unwrap();
                if (0..n).any(|v| g.neighbors(v).is_empty()) {
                    continue;
                }
                for m in [InduceModel::Push, InduceModel::Pull, InduceModel::Exchange] {
                    assert_eq!(induce_weighted(&g, m).unwrap().total_weight().unwrap(), ratio(1, 1));
                }
            }
        }
    }

    #[test]
    fn union_examples() {
        let mut r = rng();
        let k4 = GraphFamily::Complete.generate(4, &mut r).unwrap();
        assert_eq!(union_graph(&[k4.clone(), k4.clone(), k4.clone()]).unwrap(), k4);
        assert_eq!(union_graph(&[Topology::empty(4), k4.clone()]).unwrap(), k4);

        let matchings = [
            Topology::undirected(8, [(0, 1), (2, 3), (4, 5), (6, 7)]).unwrap(),
            Topology::undirected(8, [(1, 2), (3, 4), (5, 6), (7, 0)]).unwrap(),
            Topology::undirected(8, [(0, 4), (1, 5), (2, 6), (3, 7)]).unwrap(),
        ];
        assert_eq!(union_graph(&matchings).unwrap().edge_count(), 12);
        assert_eq!(union_graph(&[k4, Topology::empty(5)]), Err(NetworkError::SizeMismatch(4, 5)));

        let w = induce_weighted(&GraphFamily::Complete.generate(3, &mut r).unwrap(), InduceModel::Exchange).unwrap();
        let u = union_graph(&[w.clone(), w]).unwrap();
        assert_eq!(u.total_weight().unwrap(), ratio(2, 1));
        assert!(u.is_overweight());
    }

    #[test]
    fn adjacency_views() {
        let g = Topology::new(3, [(0, 1)], [(1, 2)]).unwrap();
        assert_eq!(g.out_neighbors(0), &[1]);
        assert_eq!(g.in_neighbors(0), &[] as &[usize]);
        assert_eq!(g.in_neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(!g.is_strongly_connected());
    }
}
