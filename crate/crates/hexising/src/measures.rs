//! Couplings, spin configurations, energies and local fields.
//!
//! Inverse temperature is absorbed into the couplings: the Gibbs weight of a
//! configuration is `exp(-H)` with `H` as computed here.

use crate::lattice::{EdgeKind, HexGraph, TorusGeometry};
use crate::{Error, Result};

/// Model couplings and the derived bond probabilities.
///
/// `p_J = 1 - exp(-2J)`, `p_q = 1 - exp(-2q)`, `delta = exp(-2q) = 1 - p_q`.
/// `J = 0` or `q = 0` are accepted (samplers then treat the corresponding
/// edges as always closed), which makes the decoupled limits testable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub j: f64,
    pub q: f64,
    pub p_j: f64,
    pub p_q: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(j: f64, q: f64) -> Result<Self> {
        if !j.is_finite() || !q.is_finite() || j < 0.0 || q < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "couplings must be finite and non-negative, got J={j}, q={q}"
            )));
        }
        Ok(Params {
            j,
            q,
            p_j: -(-2.0 * j).exp_m1(),
            p_q: -(-2.0 * q).exp_m1(),
            delta: (-2.0 * q).exp(),
        })
    }

    /// Opening probability for an edge of the given kind.
    #[inline]
    pub fn p_edge(&self, kind: EdgeKind) -> f64 {
        match kind {
            EdgeKind::J => self.p_j,
            EdgeKind::Q => self.p_q,
        }
    }

    /// Coupling strength for an edge of the given kind.
    #[inline]
    pub fn coupling(&self, kind: EdgeKind) -> f64 {
        match kind {
            EdgeKind::J => self.j,
            EdgeKind::Q => self.q,
        }
    }
}

/// Which of the two torus copies a spin or an update refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    One,
    Two,
}

/// Spin field over one torus copy, values in {-1, +1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinLayer {
    spins: Vec<i8>,
}

impl SpinLayer {
    pub fn constant(sites: usize, value: i8) -> Self {
        debug_assert!(value == 1 || value == -1);
        SpinLayer {
            spins: vec![value; sites],
        }
    }

    pub fn all_plus(sites: usize) -> Self {
        Self::constant(sites, 1)
    }

    pub fn all_minus(sites: usize) -> Self {
        Self::constant(sites, -1)
    }

    /// Decode from a bit mask: bit `i` set means spin `+1` at site `i`.
    pub fn from_bits(sites: usize, bits: u64) -> Self {
        SpinLayer {
            spins: (0..sites)
                .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        }
    }

    /// Inverse of [`SpinLayer::from_bits`].
    pub fn to_bits(&self) -> u64 {
        debug_assert!(self.spins.len() <= 64);
        self.spins
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc | (((s == 1) as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    #[inline(always)]
    pub fn get(&self, site: usize) -> i8 {
        self.spins[site]
    }

    #[inline(always)]
    pub fn set(&mut self, site: usize, value: i8) {
        debug_assert!(value == 1 || value == -1);
        self.spins[site] = value;
    }

    pub fn flip(&mut self, site: usize) {
        self.spins[site] = -self.spins[site];
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.spins
    }

    pub fn as_mut_slice(&mut self) -> &mut [i8] {
        &mut self.spins
    }

    /// Sum of spins.
    pub fn sum(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    /// Negate every spin.
    pub fn negate(&mut self) {
        for s in &mut self.spins {
            *s = -*s;
        }
    }
}

/// A pair `(σ¹, σ²)` of spin layers over the same torus; equivalently a spin
/// field on the hexagonal graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinPair {
    pub layer1: SpinLayer,
    pub layer2: SpinLayer,
}

impl SpinPair {
    pub fn new(layer1: SpinLayer, layer2: SpinLayer) -> Self {
        debug_assert_eq!(layer1.len(), layer2.len());
        SpinPair { layer1, layer2 }
    }

    pub fn constant(sites: usize, value: i8) -> Self {
        SpinPair {
            layer1: SpinLayer::constant(sites, value),
            layer2: SpinLayer::constant(sites, value),
        }
    }

    pub fn sites(&self) -> usize {
        self.layer1.len()
    }

    /// Spin at a hexagonal-graph vertex id.
    #[inline(always)]
    pub fn vertex_spin(&self, graph: &HexGraph, vertex: usize) -> i8 {
        if graph.is_layer1(vertex) {
            self.layer1.get(vertex)
        } else {
            self.layer2.get(vertex - graph.sites())
        }
    }

    pub fn layer(&self, layer: Layer) -> &SpinLayer {
        match layer {
            Layer::One => &self.layer1,
            Layer::Two => &self.layer2,
        }
    }

    /// Componentwise partial order on pairs.
    pub fn le(&self, other: &SpinPair) -> bool {
        self.layer1
            .as_slice()
            .iter()
            .zip(other.layer1.as_slice())
            .all(|(a, b)| a <= b)
            && self
                .layer2
                .as_slice()
                .iter()
                .zip(other.layer2.as_slice())
                .all(|(a, b)| a <= b)
    }
}

/// Single-layer ferromagnetic Ising energy `-J Σ_{<x,y>} σ_x σ_y` over the
/// torus bond multiset.
pub fn ising_energy(layer: &SpinLayer, geom: &TorusGeometry, params: &Params) -> f64 {
    let mut sum = 0i64;
    for &(u, v) in geom.bonds() {
        sum += (layer.get(u as usize) * layer.get(v as usize)) as i64;
    }
    -params.j * sum as f64
}

/// Asymmetric pair energy in the up/right form:
/// `-Σ_x [ J σ¹_x (σ²_{x↑} + σ²_{x→}) + q σ¹_x σ²_x ]`.
pub fn pair_energy(pair: &SpinPair, geom: &TorusGeometry, params: &Params) -> f64 {
    let (s1, s2) = (&pair.layer1, &pair.layer2);
    let mut j_sum = 0i64;
    let mut q_sum = 0i64;
    for x in 0..geom.sites() {
        let s = s1.get(x) as i64;
        j_sum += s * (s2.get(geom.up(x)) as i64 + s2.get(geom.right(x)) as i64);
        q_sum += s * s2.get(x) as i64;
    }
    -(params.j * j_sum as f64 + params.q * q_sum as f64)
}

/// The equivalent down/left form
/// `-Σ_x [ J σ²_x (σ¹_{x↓} + σ¹_{x←}) + q σ²_x σ¹_x ]`; must agree with
/// [`pair_energy`] to floating tolerance.
pub fn pair_energy_down_left(pair: &SpinPair, geom: &TorusGeometry, params: &Params) -> f64 {
    let (s1, s2) = (&pair.layer1, &pair.layer2);
    let mut j_sum = 0i64;
    let mut q_sum = 0i64;
    for x in 0..geom.sites() {
        let t = s2.get(x) as i64;
        j_sum += t * (s1.get(geom.down(x)) as i64 + s1.get(geom.left(x)) as i64);
        q_sum += t * s1.get(x) as i64;
    }
    -(params.j * j_sum as f64 + params.q * q_sum as f64)
}

/// Pair energy as an edge sum over the hexagonal graph,
/// `-Σ_e J_e σ¹_{e¹} σ²_{e²}`; equals [`pair_energy`] exactly.
pub fn pair_energy_edges(pair: &SpinPair, graph: &HexGraph, params: &Params) -> f64 {
    let mut j_sum = 0i64;
    let mut q_sum = 0i64;
    for e in graph.edges() {
        let prod = (pair.vertex_spin(graph, e.a as usize)
            * pair.vertex_spin(graph, e.b as usize)) as i64;
        match e.kind {
            EdgeKind::J => j_sum += prod,
            EdgeKind::Q => q_sum += prod,
        }
    }
    -(params.j * j_sum as f64 + params.q * q_sum as f64)
}

/// Heat-bath local field at `site` of `target_layer`, taking the opposite
/// layer as frozen. Flipping the spin at that site changes the pair energy by
/// `2 σ h`.
///
/// Layer 1: `h = J (σ²_{x↑} + σ²_{x→}) + q σ²_x`;
/// layer 2: `h = J (σ¹_{x↓} + σ¹_{x←}) + q σ¹_x`.
pub fn local_field(
    pair: &SpinPair,
    site: usize,
    target_layer: Layer,
    geom: &TorusGeometry,
    params: &Params,
) -> f64 {
    match target_layer {
        Layer::One => {
            let s2 = &pair.layer2;
            params.j * (s2.get(geom.up(site)) as f64 + s2.get(geom.right(site)) as f64)
                + params.q * s2.get(site) as f64
        }
        Layer::Two => {
            let s1 = &pair.layer1;
            params.j * (s1.get(geom.down(site)) as f64 + s1.get(geom.left(site)) as f64)
                + params.q * s1.get(site) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, Stream};

    fn random_layer(sites: usize, rng: &crate::rng::StepRng, offset: u64) -> SpinLayer {
        let mut layer = SpinLayer::all_plus(sites);
        for i in 0..sites {
            layer.set(i, rng.sign(offset + i as u64));
        }
        layer
    }

    #[test]
    fn params_derived_probabilities() {
        let p = Params::new(0.7, 1.3).unwrap();
        assert!((p.p_j - (1.0 - (-1.4f64).exp())).abs() < 1e-15);
        assert!((p.p_q - (1.0 - (-2.6f64).exp())).abs() < 1e-15);
        assert!((p.delta - (1.0 - p.p_q)).abs() < 1e-15);
        for (j, q) in [(0.01, 0.01), (3.0, 0.2), (0.4, 8.0)] {
            let p = Params::new(j, q).unwrap();
            assert!(p.p_j > 0.0 && p.p_j < 1.0);
            assert!(p.p_q > 0.0 && p.p_q < 1.0);
        }
        assert!(Params::new(-0.1, 1.0).is_err());
        assert!(Params::new(f64::NAN, 1.0).is_err());
        // zero couplings are accepted
        let p0 = Params::new(0.0, 0.0).unwrap();
        assert_eq!(p0.p_j, 0.0);
        assert_eq!(p0.p_q, 0.0);
    }

    #[test]
    fn ising_energy_known_values() {
        let g2 = TorusGeometry::new(2).unwrap();
        let p = Params::new(1.0, 0.5).unwrap();
        assert_eq!(ising_energy(&SpinLayer::all_plus(4), &g2, &p), -8.0);

        for n in [3, 4, 5] {
            let g = TorusGeometry::new(n).unwrap();
            let mut layer = SpinLayer::all_plus(n * n);
            layer.flip(g.site(1, 2));
            assert_eq!(
                ising_energy(&layer, &g, &p),
                -2.0 * (n * n) as f64 + 8.0
            );
        }

        for n in [2, 4, 6] {
            let g = TorusGeometry::new(n).unwrap();
            let mut checker = SpinLayer::all_plus(n * n);
            for s in 0..n * n {
                let (r, c) = g.coords(s);
                checker.set(s, if (r + c) % 2 == 0 { 1 } else { -1 });
            }
            assert_eq!(ising_energy(&checker, &g, &p), 2.0 * (n * n) as f64);
        }
    }

    #[test]
    fn pair_energy_known_values() {
        let g = TorusGeometry::new(2).unwrap();
        let p = Params::new(1.0, 0.5).unwrap();
        let pair = SpinPair::constant(4, 1);
        assert_eq!(pair_energy(&pair, &g, &p), -10.0);
        let h = HexGraph::new(&g);
        assert_eq!(pair_energy_edges(&pair, &h, &p), -(2.0 * 1.0 + 0.5) * 4.0);
    }

    #[test]
    fn diagonal_pair_identity() {
        // H(σ,σ) = H(σ) - q n²  for every σ
        let rng = CounterRng::new(7).at(Stream::Aux, 0);
        for n in [2, 3] {
            let g = TorusGeometry::new(n).unwrap();
            let p = Params::new(0.8, 0.6).unwrap();
            for trial in 0..50u64 {
                let layer = random_layer(n * n, &rng, trial * 64);
                let pair = SpinPair::new(layer.clone(), layer.clone());
                let lhs = pair_energy(&pair, &g, &p);
                let rhs = ising_energy(&layer, &g, &p) - p.q * (n * n) as f64;
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymmetry_witness() {
        // H(σ,τ) != H(τ,σ) for some pair at n = 3
        let g = TorusGeometry::new(3).unwrap();
        let p = Params::new(0.9, 0.4).unwrap();
        let rng = CounterRng::new(11).at(Stream::Aux, 1);
        let mut found = false;
        for trial in 0..200u64 {
            let a = random_layer(9, &rng, trial * 128);
            let b = random_layer(9, &rng, trial * 128 + 64);
            let fwd = pair_energy(&SpinPair::new(a.clone(), b.clone()), &g, &p);
            let rev = pair_energy(&SpinPair::new(b, a), &g, &p);
            if (fwd - rev).abs() > 1e-9 {
                found = true;
                break;
            }
        }
        assert!(found, "no asymmetry witness found");
    }

    #[test]
    fn two_forms_and_edge_sum_agree() {
        let rng = CounterRng::new(21).at(Stream::Aux, 2);
        let g = TorusGeometry::new(4).unwrap();
        let h = HexGraph::new(&g);
        let p = Params::new(0.55, 1.15).unwrap();
        for trial in 0..1000u64 {
            let pair = SpinPair::new(
                random_layer(16, &rng, trial * 40),
                random_layer(16, &rng, trial * 40 + 20),
            );
            let a = pair_energy(&pair, &g, &p);
            let b = pair_energy_down_left(&pair, &g, &p);
            let c = pair_energy_edges(&pair, &h, &p);
            let scale = a.abs().max(1.0);
            assert!((a - b).abs() / scale < 1e-12);
            assert!((a - c).abs() / scale < 1e-12);
        }
    }

    #[test]
    fn global_flip_invariance() {
        let rng = CounterRng::new(31).at(Stream::Aux, 3);
        let g = TorusGeometry::new(3).unwrap();
        let p = Params::new(1.2, 0.3).unwrap();
        for trial in 0..100u64 {
            let mut pair = SpinPair::new(
                random_layer(9, &rng, trial * 32),
                random_layer(9, &rng, trial * 32 + 16),
            );
            let before = pair_energy(&pair, &g, &p);
            pair.layer1.negate();
            pair.layer2.negate();
            assert!((pair_energy(&pair, &g, &p) - before).abs() < 1e-12);
        }
    }

    #[test]
    fn local_field_extremes() {
        let g = TorusGeometry::new(3).unwrap();
        let p = Params::new(0.7, 0.4).unwrap();
        let plus = SpinPair::constant(9, 1);
        assert!((local_field(&plus, 4, Layer::One, &g, &p) - (2.0 * 0.7 + 0.4)).abs() < 1e-15);
        let mixed = SpinPair::new(SpinLayer::all_plus(9), SpinLayer::all_minus(9));
        assert!(
            (local_field(&mixed, 4, Layer::One, &g, &p) + (2.0 * 0.7 + 0.4)).abs() < 1e-15
        );
        // layer-2 field reads layer 1, which is all plus here
        assert!((local_field(&mixed, 4, Layer::Two, &g, &p) - (2.0 * 0.7 + 0.4)).abs() < 1e-15);
    }

    #[test]
    fn flip_energy_matches_local_field() {
        let rng = CounterRng::new(41).at(Stream::Aux, 4);
        let g = TorusGeometry::new(3).unwrap();
        let p = Params::new(0.85, 0.95).unwrap();
        for trial in 0..100u64 {
            let mut pair = SpinPair::new(
                random_layer(9, &rng, trial * 64),
                random_layer(9, &rng, trial * 64 + 32),
            );
            let site = (rng.raw(trial * 64 + 63) % 9) as usize;
            let layer = if rng.raw(trial * 64 + 62) & 1 == 0 {
                Layer::One
            } else {
                Layer::Two
            };
            let before = pair_energy(&pair, &g, &p);
            let h = local_field(&pair, site, layer, &g, &p);
            let s = pair.layer(layer).get(site) as f64;
            match layer {
                Layer::One => pair.layer1.flip(site),
                Layer::Two => pair.layer2.flip(site),
            }
            let after = pair_energy(&pair, &g, &p);
            assert!((after - before - 2.0 * s * h).abs() < 1e-12);
        }
    }
}
