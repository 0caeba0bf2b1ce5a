//! Random cluster configurations on the hexagonal graph: weights, cluster
//! counting, and the two conditional samplers of the spin/bond coupling,
//! composed into a cluster sweep.

use crate::lattice::HexGraph;
use crate::measures::{Params, SpinLayer, SpinPair};
use crate::rng::{CounterRng, Stream};
use crate::{Error, Result};

/// Bond configuration `ω ∈ {0,1}^E`, indexed like [`HexGraph::edges`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondConfig {
    pub open: Vec<bool>,
}

impl BondConfig {
    pub fn all_closed(graph: &HexGraph) -> Self {
        BondConfig {
            open: vec![false; graph.edges().len()],
        }
    }

    pub fn all_open(graph: &HexGraph) -> Self {
        BondConfig {
            open: vec![true; graph.edges().len()],
        }
    }

    /// Decode from a bit mask (edge `e` open iff bit `e` set). Enumeration
    /// helper for graphs with at most 64 edges.
    pub fn from_bits(edges: usize, bits: u64) -> Self {
        BondConfig {
            open: (0..edges).map(|e| bits >> e & 1 == 1).collect(),
        }
    }

    pub fn count_open(&self) -> usize {
        self.open.iter().filter(|&&b| b).count()
    }
}

/// Partition of the vertices into open clusters.
///
/// `rep[v]` is the smallest vertex id in the cluster of `v`, which makes
/// cluster ids canonical: they do not depend on edge processing order, so
/// randomness addressed by cluster id is reproducible.
#[derive(Clone, Debug)]
pub struct ClusterPartition {
    rep: Vec<u32>,
    pub count: usize,
}

impl ClusterPartition {
    #[inline]
    pub fn cluster_id(&self, vertex: usize) -> usize {
        self.rep[vertex] as usize
    }

    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.rep[u] == self.rep[v]
    }

    pub fn reps(&self) -> &[u32] {
        &self.rep
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
    }
}

/// Open-cluster partition of `(V, η(ω))` via union-find with canonical
/// (minimum-vertex) representatives.
pub fn cluster_partition(omega: &BondConfig, graph: &HexGraph) -> ClusterPartition {
    let v = graph.vertices();
    let mut uf = UnionFind::new(v);
    for (e, edge) in graph.edges().iter().enumerate() {
        if omega.open[e] {
            uf.union(edge.a as usize, edge.b as usize);
        }
    }
    let mut min_of_root = vec![u32::MAX; v];
    let mut count = 0;
    let mut rep = vec![0u32; v];
    for x in 0..v {
        let root = uf.find(x);
        if min_of_root[root] == u32::MAX {
            min_of_root[root] = x as u32;
            count += 1;
        }
        rep[x] = min_of_root[root];
    }
    ClusterPartition { rep, count }
}

/// True iff `u` and `v` are joined by an open path in `ω`.
pub fn connected(omega: &BondConfig, graph: &HexGraph, u: usize, v: usize) -> bool {
    cluster_partition(omega, graph).same_cluster(u, v)
}

/// Log of the unnormalized random-cluster weight
/// `Π_e p_e^{ω(e)} (1-p_e)^{1-ω(e)} · 2^{k(ω)}`.
///
/// Degenerate probabilities (`p_e` of 0 or 1) are rejected here; the samplers
/// handle those limits directly.
pub fn rcm_log_weight(omega: &BondConfig, params: &Params, graph: &HexGraph) -> Result<f64> {
    for kind in [crate::lattice::EdgeKind::J, crate::lattice::EdgeKind::Q] {
        let p = params.p_edge(kind);
        if p <= 0.0 || p >= 1.0 {
            return Err(Error::DegenerateEdgeProbability(p));
        }
    }
    let mut log_w = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        let p = params.p_edge(edge.kind);
        log_w += if omega.open[e] { p.ln() } else { (1.0 - p).ln() };
    }
    log_w += cluster_partition(omega, graph).count as f64 * std::f64::consts::LN_2;
    Ok(log_w)
}

/// Conditional bond sampler given the spins: an edge whose endpoint spins
/// disagree is closed; an agreeing edge opens independently with probability
/// `p_J` or `p_q` by kind.
///
/// Randomness is addressed by edge index within `(Stream::Bond, step)`, so
/// the draw is reproducible for any evaluation order.
pub fn bonds_given_spins(
    pair: &SpinPair,
    params: &Params,
    graph: &HexGraph,
    rng: &CounterRng,
    step: u64,
) -> BondConfig {
    let draws = rng.at(Stream::Bond, step);
    let sites = graph.sites();
    let open = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let s1 = pair.layer1.get(edge.a as usize);
            let s2 = pair.layer2.get(edge.b as usize - sites);
            s1 == s2 && draws.uniform(e as u64) < params.p_edge(edge.kind)
        })
        .collect();
    BondConfig { open }
}

/// Conditional spin sampler given the bonds: one fair spin per open cluster,
/// constant on the cluster, independent across clusters.
///
/// Randomness is addressed by the canonical cluster id within
/// `(Stream::ClusterSpin, step)`.
pub fn spins_given_bonds(
    omega: &BondConfig,
    graph: &HexGraph,
    rng: &CounterRng,
    step: u64,
) -> SpinPair {
    let part = cluster_partition(omega, graph);
    let draws = rng.at(Stream::ClusterSpin, step);
    let sites = graph.sites();
    let mut layer1 = SpinLayer::all_plus(sites);
    let mut layer2 = SpinLayer::all_plus(sites);
    for v in 0..graph.vertices() {
        let s = draws.sign(part.cluster_id(v) as u64);
        if v < sites {
            layer1.set(v, s);
        } else {
            layer2.set(v - sites, s);
        }
    }
    SpinPair::new(layer1, layer2)
}

/// One full bond-then-spin resampling (a Swendsen-Wang-style global sweep).
/// Stationary for the pair Gibbs measure; validated exactly against the
/// enumeration oracle at n = 2.
pub fn fk_sweep(
    pair: &SpinPair,
    params: &Params,
    graph: &HexGraph,
    rng: &CounterRng,
    step: u64,
) -> SpinPair {
    let omega = bonds_given_spins(pair, params, graph, rng, step);
    spins_given_bonds(&omega, graph, rng, step)
}
