//! Brute-force enumeration at tiny sizes: exact probability tables for the
//! single-layer Gibbs measure, the pair measure and its layer-1 marginal, the
//! random-cluster measure, the spin/bond coupling, and the exact transition
//! kernels of both samplers. These tables are the ground truth every other
//! module is tested against.
//!
//! Configurations are bit-packed integers (site `i` maps to bit `i`; pair
//! configurations put layer 1 in the low `n²` bits). Budgets are hard caps:
//! a request over 24 bits is an error, never a truncation.

use crate::lattice::{HexGraph, TorusGeometry};
use crate::measures::{
    ising_energy, local_field, pair_energy, Layer, Params, SpinLayer, SpinPair,
};
use crate::rcm::{cluster_partition, BondConfig};
use crate::{Error, Result};

/// Enumeration budget in bits.
pub const ENUM_BITS_CAP: usize = 24;

/// Which configuration space a table enumerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigSpace {
    /// Single-layer spins, `2^(n²)` configurations.
    Layer { n: usize },
    /// Spin pairs, `2^(2n²)` configurations.
    Pair { n: usize },
    /// Bond configurations, `2^(3n²)` configurations.
    Bonds { n: usize },
}

impl ConfigSpace {
    pub fn bits(&self) -> usize {
        match *self {
            ConfigSpace::Layer { n } => n * n,
            ConfigSpace::Pair { n } => 2 * n * n,
            ConfigSpace::Bonds { n } => 3 * n * n,
        }
    }
}

/// Exact probability table with its partition function.
#[derive(Clone, Debug)]
pub struct DistTable {
    pub space: ConfigSpace,
    pub probs: Vec<f64>,
    pub partition: f64,
}

impl DistTable {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Total variation distance to another table over the same space.
    pub fn tv_distance(&self, other: &DistTable) -> f64 {
        assert_eq!(self.space, other.space);
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Expectation of an observable given per-configuration values.
    pub fn expectation(&self, value: impl Fn(u64) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(idx, &p)| p * value(idx as u64))
            .sum()
    }

    fn from_weights(space: ConfigSpace, mut weights: Vec<f64>) -> Self {
        let partition: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= partition;
        }
        DistTable {
            space,
            probs: weights,
            partition,
        }
    }
}

fn check_budget(bits: usize) -> Result<()> {
    if bits > ENUM_BITS_CAP {
        Err(Error::EnumerationBudget {
            bits,
            cap: ENUM_BITS_CAP,
        })
    } else {
        Ok(())
    }
}

/// Decode a pair configuration index: layer 1 in the low `n²` bits, layer 2
/// in the next `n²`.
pub fn pair_from_bits(sites: usize, bits: u64) -> SpinPair {
    SpinPair::new(
        SpinLayer::from_bits(sites, bits),
        SpinLayer::from_bits(sites, bits >> sites),
    )
}

/// Inverse of [`pair_from_bits`].
pub fn pair_to_bits(pair: &SpinPair) -> u64 {
    pair.layer1.to_bits() | (pair.layer2.to_bits() << pair.sites())
}

/// Exact pair Gibbs table over `X²_Λ` (budget: `2n² ≤ 24`).
pub fn enumerate_pi2(n: usize, params: &Params) -> Result<DistTable> {
    let geom = TorusGeometry::new(n)?;
    let sites = geom.sites();
    check_budget(2 * sites)?;
    let total = 1u64 << (2 * sites);
    let weights: Vec<f64> = (0..total)
        .map(|bits| (-pair_energy(&pair_from_bits(sites, bits), &geom, params)).exp())
        .collect();
    Ok(DistTable::from_weights(ConfigSpace::Pair { n }, weights))
}

/// Layer-1 marginal of a pair table: the measure `π`, sharing the pair
/// table's partition function.
pub fn marginal_pi(pi2: &DistTable) -> DistTable {
    let n = match pi2.space {
        ConfigSpace::Pair { n } => n,
        _ => panic!("marginal_pi needs a pair table"),
    };
    let sites = n * n;
    let mut probs = vec![0.0; 1 << sites];
    for (idx, &p) in pi2.probs.iter().enumerate() {
        probs[idx & ((1 << sites) - 1)] += p;
    }
    DistTable {
        space: ConfigSpace::Layer { n },
        probs,
        partition: pi2.partition,
    }
}

/// Layer-2 marginal of a pair table.
pub fn marginal_layer2(pi2: &DistTable) -> DistTable {
    let n = match pi2.space {
        ConfigSpace::Pair { n } => n,
        _ => panic!("marginal_layer2 needs a pair table"),
    };
    let sites = n * n;
    let mut probs = vec![0.0; 1 << sites];
    for (idx, &p) in pi2.probs.iter().enumerate() {
        probs[idx >> sites] += p;
    }
    DistTable {
        space: ConfigSpace::Layer { n },
        probs,
        partition: pi2.partition,
    }
}

/// Exact single-layer Gibbs table over `X_Λ` (budget: `n² ≤ 24`).
pub fn enumerate_pi_gibbs(n: usize, params: &Params) -> Result<DistTable> {
    let geom = TorusGeometry::new(n)?;
    let sites = geom.sites();
    check_budget(sites)?;
    let total = 1u64 << sites;
    let weights: Vec<f64> = (0..total)
        .map(|bits| (-ising_energy(&SpinLayer::from_bits(sites, bits), &geom, params)).exp())
        .collect();
    Ok(DistTable::from_weights(ConfigSpace::Layer { n }, weights))
}

/// Exact random-cluster table over `Ω` (budget: `3n² ≤ 24`, so `n = 2`).
pub fn enumerate_rcm(n: usize, params: &Params) -> Result<DistTable> {
    let geom = TorusGeometry::new(n)?;
    let graph = HexGraph::new(&geom);
    let edges = graph.edges().len();
    check_budget(edges)?;
    let total = 1u64 << edges;
    let weights: Vec<f64> = (0..total)
        .map(|bits| {
            let omega = BondConfig::from_bits(edges, bits);
            let mut w = 1.0;
            for (e, edge) in graph.edges().iter().enumerate() {
                let p = params.p_edge(edge.kind);
                w *= if omega.open[e] { p } else { 1.0 - p };
            }
            w * 2f64.powi(cluster_partition(&omega, &graph).count as i32)
        })
        .collect();
    Ok(DistTable::from_weights(ConfigSpace::Bonds { n }, weights))
}

/// Report of the exact coupling checks at `n = 2`: sup-norm errors between
/// the marginals of the enumerated joint measure and the independently
/// enumerated pair and bond tables.
#[derive(Clone, Copy, Debug)]
pub struct CouplingReport {
    pub pair_marginal_sup_err: f64,
    pub bond_marginal_sup_err: f64,
}

/// Build the unnormalized joint mass
/// `μ(σ, ω) ∝ Π_e [(1-p_e) 1{ω_e=0} + p_e 1{ω_e=1} δ_e(σ)]`
/// over pairs and bonds at `n = 2`, normalize, and compare both marginals
/// against [`enumerate_pi2`] and [`enumerate_rcm`].
pub fn exact_coupling_checks(params: &Params) -> Result<CouplingReport> {
    let n = 2;
    let geom = TorusGeometry::new(n)?;
    let graph = HexGraph::new(&geom);
    let sites = geom.sites();
    let edges = graph.edges().len();
    check_budget(2 * sites)?;
    check_budget(edges)?;

    let pair_count = 1usize << (2 * sites);
    let omega_count = 1usize << edges;
    let mut pair_marginal = vec![0.0f64; pair_count];
    let mut bond_marginal = vec![0.0f64; omega_count];
    let mut total = 0.0f64;

    let p_e: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| params.p_edge(e.kind))
        .collect();

    for pair_bits in 0..pair_count as u64 {
        let pair = pair_from_bits(sites, pair_bits);
        // bitmask of edges whose endpoint spins agree
        let mut agree = 0u64;
        for (e, edge) in graph.edges().iter().enumerate() {
            let s1 = pair.layer1.get(edge.a as usize);
            let s2 = pair.layer2.get(edge.b as usize - sites);
            if s1 == s2 {
                agree |= 1 << e;
            }
        }
        for omega_bits in 0..omega_count as u64 {
            // an open edge with disagreeing endpoints has zero mass
            if omega_bits & !agree != 0 {
                continue;
            }
            let mut mass = 1.0;
            for (e, &p) in p_e.iter().enumerate() {
                mass *= if omega_bits >> e & 1 == 1 { p } else { 1.0 - p };
            }
            pair_marginal[pair_bits as usize] += mass;
            bond_marginal[omega_bits as usize] += mass;
            total += mass;
        }
    }
    for v in &mut pair_marginal {
        *v /= total;
    }
    for v in &mut bond_marginal {
        *v /= total;
    }

    let pi2 = enumerate_pi2(n, params)?;
    let pair_err = pair_marginal
        .iter()
        .zip(&pi2.probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    // the RCM weights are well defined for degenerate p as well; compute
    // directly rather than through the log-weight path
    let mut weights = vec![0.0f64; omega_count];
    let mut z = 0.0;
    for bits in 0..omega_count as u64 {
        let omega = BondConfig::from_bits(edges, bits);
        let mut w = 1.0;
        for (e, edge) in graph.edges().iter().enumerate() {
            let p = params.p_edge(edge.kind);
            w *= if omega.open[e] { p } else { 1.0 - p };
        }
        w *= 2f64.powi(cluster_partition(&omega, &graph).count as i32);
        weights[bits as usize] = w;
        z += w;
    }
    let bond_err = bond_marginal
        .iter()
        .zip(&weights)
        .map(|(a, w)| (a - w / z).abs())
        .fold(0.0f64, f64::max);

    Ok(CouplingReport {
        pair_marginal_sup_err: pair_err,
        bond_marginal_sup_err: bond_err,
    })
}

/// Exact two-point function both ways: `(π(σ_x σ_y), Φ(x¹ ↔ y¹))`. The two
/// values must agree within 1e-10.
pub fn exact_two_point(
    n: usize,
    params: &Params,
    x: (usize, usize),
    y: (usize, usize),
) -> Result<(f64, f64)> {
    let geom = TorusGeometry::new(n)?;
    let graph = HexGraph::new(&geom);
    let sx = geom.site(x.0, x.1);
    let sy = geom.site(y.0, y.1);

    let pi = marginal_pi(&enumerate_pi2(n, params)?);
    let spin_side = pi.expectation(|bits| {
        let a = if bits >> sx & 1 == 1 { 1.0 } else { -1.0 };
        let b = if bits >> sy & 1 == 1 { 1.0 } else { -1.0 };
        a * b
    });

    let phi = enumerate_rcm(n, params)?;
    let edges = graph.edges().len();
    let mut fk_side = 0.0;
    for (bits, &p) in phi.probs.iter().enumerate() {
        let omega = BondConfig::from_bits(edges, bits as u64);
        if cluster_partition(&omega, &graph).same_cluster(sx, sy) {
            fk_side += p;
        }
    }
    Ok((spin_side, fk_side))
}

/// Magnetization check per the marginal/pair identity: mean magnetizations
/// under `π` and `π₂` (both vanish on the torus by spin-flip symmetry) and
/// the sup-norm gap between the distribution of `Σ_x σ_x` under `π` and the
/// layer-1 magnetization distribution computed from the pair table.
#[derive(Clone, Debug)]
pub struct MagnetizationReport {
    pub m: f64,
    pub m2: f64,
    /// Distribution of the total layer-1 spin (value, probability) under π.
    pub pi_distribution: Vec<(i64, f64)>,
    /// Same distribution computed from the pair table directly.
    pub pi2_layer1_distribution: Vec<(i64, f64)>,
    pub distribution_sup_err: f64,
}

pub fn exact_magnetization(n: usize, params: &Params) -> Result<MagnetizationReport> {
    let sites = n * n;
    let pi2 = enumerate_pi2(n, params)?;
    let pi = marginal_pi(&pi2);

    let spin_sum = |bits: u64, width: usize| -> i64 {
        (2 * (bits & ((1u64 << width) - 1)).count_ones() as i64) - width as i64
    };

    let m = pi.expectation(|bits| spin_sum(bits, sites) as f64) / sites as f64;
    let m2 = pi2.expectation(|bits| {
        (spin_sum(bits, sites) + spin_sum(bits >> sites, sites)) as f64
    }) / (2 * sites) as f64;

    let mut dist_pi = std::collections::BTreeMap::new();
    for (bits, &p) in pi.probs.iter().enumerate() {
        *dist_pi.entry(spin_sum(bits as u64, sites)).or_insert(0.0) += p;
    }
    let mut dist_pi2 = std::collections::BTreeMap::new();
    for (bits, &p) in pi2.probs.iter().enumerate() {
        *dist_pi2.entry(spin_sum(bits as u64, sites)).or_insert(0.0) += p;
    }
    let sup_err = dist_pi
        .iter()
        .map(|(k, v)| (v - dist_pi2.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0f64, f64::max);

    Ok(MagnetizationReport {
        m,
        m2,
        pi_distribution: dist_pi.into_iter().collect(),
        pi2_layer1_distribution: dist_pi2.into_iter().collect(),
        distribution_sup_err: sup_err,
    })
}

/// Exact total variation distance between `π` and the single-layer Gibbs
/// measure at the same `J`.
pub fn exact_tv_to_gibbs(n: usize, params: &Params) -> Result<f64> {
    let pi = marginal_pi(&enumerate_pi2(n, params)?);
    let gibbs = enumerate_pi_gibbs(n, params)?;
    Ok(pi.tv_distance(&gibbs))
}

/// Transition matrix of one parallel heat-bath layer update at tiny size,
/// from the product formula `P(σ'|frozen) = Π_x e^{h_x σ'_x} / (2 cosh h_x)`.
///
/// For `layer = One` rows are indexed by the frozen layer-2 bits; for
/// `layer = Two` rows are the frozen layer-1 bits. Entry `[frozen][next]`.
pub fn layer_update_matrix(n: usize, params: &Params, layer: Layer) -> Result<Vec<Vec<f64>>> {
    let geom = TorusGeometry::new(n)?;
    let sites = geom.sites();
    check_budget(2 * sites)?;
    let count = 1usize << sites;
    let mut matrix = vec![vec![0.0; count]; count];
    for frozen_bits in 0..count as u64 {
        let frozen = SpinLayer::from_bits(sites, frozen_bits);
        let pair = match layer {
            Layer::One => SpinPair::new(SpinLayer::all_plus(sites), frozen.clone()),
            Layer::Two => SpinPair::new(frozen.clone(), SpinLayer::all_plus(sites)),
        };
        let fields: Vec<f64> = (0..sites)
            .map(|x| local_field(&pair, x, layer, &geom, params))
            .collect();
        for next_bits in 0..count as u64 {
            let mut p = 1.0;
            for (x, &h) in fields.iter().enumerate() {
                let s = if next_bits >> x & 1 == 1 { 1.0 } else { -1.0 };
                p *= (h * s).exp() / (2.0 * h.cosh());
            }
            matrix[frozen_bits as usize][next_bits as usize] = p;
        }
    }
    Ok(matrix)
}

/// Apply the exact shaken sweep kernel (layer-1 update then layer-2 update)
/// to a pair distribution. Input and output are indexed like pair tables.
pub fn apply_shaken_sweep_kernel(n: usize, params: &Params, dist: &[f64]) -> Result<Vec<f64>> {
    let sites = n * n;
    check_budget(2 * sites)?;
    let count = 1usize << sites;
    assert_eq!(dist.len(), count * count);
    let a = layer_update_matrix(n, params, Layer::One)?; // rows: τ, cols: σ'
    let b = layer_update_matrix(n, params, Layer::Two)?; // rows: σ', cols: τ'

    // layer-1 update depends only on τ, so sum σ out first
    let mut tau_weight = vec![0.0; count];
    for (idx, &w) in dist.iter().enumerate() {
        tau_weight[idx >> sites] += w;
    }
    let mut sigma_weight = vec![0.0; count];
    for (tau, &w) in tau_weight.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (sigma_next, out) in sigma_weight.iter_mut().enumerate() {
            *out += w * a[tau][sigma_next];
        }
    }
    let mut result = vec![0.0; count * count];
    for (sigma_next, &w) in sigma_weight.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for tau_next in 0..count {
            result[sigma_next | (tau_next << sites)] += w * b[sigma_next][tau_next];
        }
    }
    Ok(result)
}

/// Sup-norm residual `max |π₂ K - π₂|` of the exact shaken sweep kernel.
pub fn shaken_kernel_residual(n: usize, params: &Params) -> Result<f64> {
    let pi2 = enumerate_pi2(n, params)?;
    let after = apply_shaken_sweep_kernel(n, params, &pi2.probs)?;
    Ok(pi2
        .probs
        .iter()
        .zip(&after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max))
}

/// Stationary distribution of the exact shaken sweep kernel by power
/// iteration from the uniform distribution. Returns the fixed point and the
/// number of iterations used.
pub fn shaken_kernel_power_iteration(
    n: usize,
    params: &Params,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let sites = n * n;
    check_budget(2 * sites)?;
    let count = 1usize << (2 * sites);
    let mut v = vec![1.0 / count as f64; count];
    for iter in 1..=max_iter {
        let next = apply_shaken_sweep_kernel(n, params, &v)?;
        let delta: f64 = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if delta < tol {
            return Ok((v, iter));
        }
    }
    Ok((v, max_iter))
}

/// Exact checks of the composed bond-then-spin sweep at `n = 2`.
#[derive(Clone, Copy, Debug)]
pub struct FkKernelReport {
    /// `max |π₂ K - π₂|` for the composed cluster-sweep kernel.
    pub kernel_residual: f64,
    /// `max |Σ_σ π₂(σ) P(ω|σ) - Φ(ω)|`, the bond-marginal identity.
    pub bond_marginal_residual: f64,
}

/// Build the exact cluster-sweep kernel by enumeration over bond outcomes
/// and verify that it fixes the pair Gibbs table.
pub fn fk_kernel_checks(params: &Params) -> Result<FkKernelReport> {
    let n = 2;
    let geom = TorusGeometry::new(n)?;
    let graph = HexGraph::new(&geom);
    let sites = geom.sites();
    let edges = graph.edges().len();
    check_budget(edges)?;

    let pi2 = enumerate_pi2(n, params)?;
    let phi = enumerate_rcm(n, params)?;
    let pair_count = 1usize << (2 * sites);
    let omega_count = 1usize << edges;
    let p_e: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| params.p_edge(e.kind))
        .collect();

    // w[ω] = Σ_σ π₂(σ) P(ω|σ)
    let mut w = vec![0.0f64; omega_count];
    for pair_bits in 0..pair_count as u64 {
        let pair = pair_from_bits(sites, pair_bits);
        let weight = pi2.probs[pair_bits as usize];
        let mut agree = 0u64;
        for (e, edge) in graph.edges().iter().enumerate() {
            if pair.layer1.get(edge.a as usize) == pair.layer2.get(edge.b as usize - sites) {
                agree |= 1 << e;
            }
        }
        // iterate submasks of the agreeing edges
        let mut sub = agree;
        loop {
            let mut mass = 1.0;
            for (e, &p) in p_e.iter().enumerate() {
                if agree >> e & 1 == 1 {
                    mass *= if sub >> e & 1 == 1 { p } else { 1.0 - p };
                }
            }
            w[sub as usize] += weight * mass;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & agree;
        }
    }
    let bond_marginal_residual = w
        .iter()
        .zip(&phi.probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    // v[σ'] = Σ_ω w[ω] P(σ'|ω): spins uniform per cluster
    let mut v = vec![0.0f64; pair_count];
    for (omega_bits, &mass) in w.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let omega = BondConfig::from_bits(edges, omega_bits as u64);
        let part = cluster_partition(&omega, &graph);
        let mut reps: Vec<u32> = Vec::with_capacity(part.count);
        for vertex in 0..graph.vertices() {
            let id = part.cluster_id(vertex) as u32;
            if !reps.contains(&id) {
                reps.push(id);
            }
        }
        let k = reps.len();
        let per_assignment = mass / (1u64 << k) as f64;
        for assign in 0..(1u64 << k) {
            let mut pair_bits = 0u64;
            for vertex in 0..graph.vertices() {
                let id = part.cluster_id(vertex) as u32;
                let slot = reps.iter().position(|&r| r == id).unwrap();
                if assign >> slot & 1 == 1 {
                    pair_bits |= 1 << vertex;
                }
            }
            v[pair_bits as usize] += per_assignment;
        }
    }
    let kernel_residual = v
        .iter()
        .zip(&pi2.probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    Ok(FkKernelReport {
        kernel_residual,
        bond_marginal_residual,
    })
}

/// Report of the plus/minus boundary identity on the frozen-ring box.
#[derive(Clone, Debug)]
pub struct BoundaryReport {
    /// `max_x |π^+(σ_x) - Φ(x¹ ↔ ghost)|` over inner sites.
    pub sup_err_plus: f64,
    /// `max_x |π^-(σ_x) + Φ(x¹ ↔ ghost)|` over inner sites.
    pub sup_err_minus: f64,
}

/// Check the boundary one-point identity `π^±(σ_x) = ±Φ(x¹ ↔ boundary)` on
/// an `(n+2) x (n+2)` free-boundary box whose outer ring is frozen (both
/// layers) to `+1` or `-1`, with the frozen vertices wired into a single
/// ghost vertex for the cluster convention. Budgets: `2n²` spin bits and
/// `3n² + 2n` edges, so `n = 2` in practice.
pub fn plus_minus_boundary_check(n: usize, params: &Params) -> Result<BoundaryReport> {
    check_budget(2 * n * n)?;
    check_budget(3 * n * n + 2 * n)?;

    let m = n + 2;
    let inner = |r: usize, c: usize| (1..=n).contains(&r) && (1..=n).contains(&c);
    // free-vertex ids: layer-1 inner sites then layer-2 inner sites
    let free_id = |r: usize, c: usize, layer: usize| (r - 1) * n + (c - 1) + layer * n * n;
    let free_count = 2 * n * n;
    let ghost = free_count;

    struct BoxEdge {
        u: usize,
        v: usize,
        p: f64,
        j: f64,
    }
    let mut box_edges: Vec<BoxEdge> = Vec::new();
    for r in 0..m {
        for c in 0..m {
            let l1_free = inner(r, c);
            if l1_free {
                // q-edge (x¹, x²), both endpoints free for inner x
                box_edges.push(BoxEdge {
                    u: free_id(r, c, 0),
                    v: free_id(r, c, 1),
                    p: params.p_q,
                    j: params.q,
                });
            }
            // J-edges without wraparound; keep those touching a free vertex
            if r + 1 < m {
                let l2_free = inner(r + 1, c);
                if l1_free || l2_free {
                    box_edges.push(BoxEdge {
                        u: if l1_free { free_id(r, c, 0) } else { ghost },
                        v: if l2_free { free_id(r + 1, c, 1) } else { ghost },
                        p: params.p_j,
                        j: params.j,
                    });
                }
            }
            if c + 1 < m {
                let l2_free = inner(r, c + 1);
                if l1_free || l2_free {
                    box_edges.push(BoxEdge {
                        u: if l1_free { free_id(r, c, 0) } else { ghost },
                        v: if l2_free { free_id(r, c + 1, 1) } else { ghost },
                        p: params.p_j,
                        j: params.j,
                    });
                }
            }
        }
    }
    check_budget(box_edges.len())?;

    let spin_expectations = |boundary: f64| -> Vec<f64> {
        let total = 1u64 << free_count;
        let mut z = 0.0;
        let mut sums = vec![0.0; n * n];
        for bits in 0..total {
            let spin = |v: usize| -> f64 {
                if v == ghost {
                    boundary
                } else if bits >> v & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            };
            let mut energy = 0.0;
            for e in &box_edges {
                energy -= e.j * spin(e.u) * spin(e.v);
            }
            let w = (-energy).exp();
            z += w;
            for x in 0..n * n {
                sums[x] += w * spin(x);
            }
        }
        sums.into_iter().map(|s| s / z).collect()
    };

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    // RCM side: enumerate bond configs, wire the ghost, measure connectivity
    let edge_count = box_edges.len();
    let omega_total = 1u64 << edge_count;
    let vertices = free_count + 1;
    let mut z_rc = 0.0;
    let mut hit = vec![0.0; n * n];
    for bits in 0..omega_total {
        let mut parent: Vec<usize> = (0..vertices).collect();
        let mut weight = 1.0;
        for (e, edge) in box_edges.iter().enumerate() {
            if bits >> e & 1 == 1 {
                weight *= edge.p;
                let (ru, rv) = (find(&mut parent, edge.u), find(&mut parent, edge.v));
                if ru != rv {
                    parent[ru] = rv;
                }
            } else {
                weight *= 1.0 - edge.p;
            }
        }
        let mut k = 0;
        for v in 0..vertices {
            if find(&mut parent, v) == v {
                k += 1;
            }
        }
        let w = weight * 2f64.powi(k);
        z_rc += w;
        let ghost_root = find(&mut parent, ghost);
        for (x, h) in hit.iter_mut().enumerate() {
            if find(&mut parent, x) == ghost_root {
                *h += w;
            }
        }
    }
    for h in &mut hit {
        *h /= z_rc;
    }

    let plus = spin_expectations(1.0);
    let minus = spin_expectations(-1.0);
    let sup_err_plus = plus
        .iter()
        .zip(&hit)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let sup_err_minus = minus
        .iter()
        .zip(&hit)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0f64, f64::max);

    Ok(BoundaryReport {
        sup_err_plus,
        sup_err_minus,
    })
}
