//! Lattice geometry: the square torus, the hexagonal double-layer graph, and
//! the diagonal slice geometry used by the correlation experiments.

use crate::{Error, Result};

/// An `n x n` square torus with periodic boundary conditions.
///
/// Sites are indexed row-major: site `r * n + c` is at `(row r, col c)`.
/// "Up" is `(row + 1, col)` and "right" is `(row, col + 1)`, both wrapping.
/// The convention matters because the pair interaction is asymmetric: layer 1
/// couples to the up/right neighbours of layer 2.
///
/// `bonds` is the nearest-neighbour bond *multiset* `{x, up(x)}` and
/// `{x, right(x)}` over all sites, so it always has `2 n²` entries. At `n = 2`
/// the same unordered pair appears twice; energy sums iterate the multiset,
/// which keeps the Hamiltonian and the enumeration oracle consistent at the
/// smallest testable size.
#[derive(Clone, Debug)]
pub struct TorusGeometry {
    n: usize,
    up: Vec<u32>,
    right: Vec<u32>,
    down: Vec<u32>,
    left: Vec<u32>,
    bonds: Vec<(u32, u32)>,
}

impl TorusGeometry {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::LatticeTooSmall(n));
        }
        let sites = n * n;
        let mut up = vec![0u32; sites];
        let mut right = vec![0u32; sites];
        let mut down = vec![0u32; sites];
        let mut left = vec![0u32; sites];
        let mut bonds = Vec::with_capacity(2 * sites);
        for r in 0..n {
            for c in 0..n {
                let s = r * n + c;
                up[s] = (((r + 1) % n) * n + c) as u32;
                down[s] = (((r + n - 1) % n) * n + c) as u32;
                right[s] = (r * n + (c + 1) % n) as u32;
                left[s] = (r * n + (c + n - 1) % n) as u32;
            }
        }
        for s in 0..sites {
            bonds.push((s as u32, up[s]));
            bonds.push((s as u32, right[s]));
        }
        Ok(TorusGeometry {
            n,
            up,
            right,
            down,
            left,
            bonds,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sites, `n²`.
    pub fn sites(&self) -> usize {
        self.n * self.n
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        (row % self.n) * self.n + col % self.n
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.n, site % self.n)
    }

    #[inline(always)]
    pub fn up(&self, site: usize) -> usize {
        self.up[site] as usize
    }

    #[inline(always)]
    pub fn right(&self, site: usize) -> usize {
        self.right[site] as usize
    }

    #[inline(always)]
    pub fn down(&self, site: usize) -> usize {
        self.down[site] as usize
    }

    #[inline(always)]
    pub fn left(&self, site: usize) -> usize {
        self.left[site] as usize
    }

    /// Nearest-neighbour bond multiset, `2 n²` entries.
    pub fn bonds(&self) -> &[(u32, u32)] {
        &self.bonds
    }
}

/// Edge type on the hexagonal graph: nearest-neighbour (`J`) or same-site
/// inertial (`Q`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    J,
    Q,
}

/// One edge of the hexagonal graph. `a` is always the layer-1 endpoint and
/// `b` the layer-2 endpoint (the graph is bipartite between the layers).
#[derive(Clone, Copy, Debug)]
pub struct HexEdge {
    pub a: u32,
    pub b: u32,
    pub kind: EdgeKind,
}

/// The bipartite degree-3 graph built from two copies of the torus.
///
/// Vertices `0..n²` are layer 1 (`x¹`), vertices `n²..2n²` are layer 2
/// (`x²`). Each site `x` contributes three edges, stored contiguously:
///
/// - `3x`:     q-edge  `x¹ — x²`
/// - `3x + 1`: J-edge  `x¹ — (x↑)²`
/// - `3x + 2`: J-edge  `x¹ — (x→)²`
///
/// so `|E| = 3 n²` with `n²` q-edges and `2 n²` J-edges, and every vertex has
/// degree exactly 3. Erasing the q-edges leaves `n` disjoint rings running
/// along the anti-diagonal (the q→0 limit); contracting them collapses the
/// graph onto the torus bond multiset (the q→∞ limit).
#[derive(Clone, Debug)]
pub struct HexGraph {
    n: usize,
    edges: Vec<HexEdge>,
    incident: Vec<[u32; 3]>,
}

impl HexGraph {
    pub fn new(geom: &TorusGeometry) -> Self {
        let n = geom.n();
        let sites = geom.sites();
        let mut edges = Vec::with_capacity(3 * sites);
        for x in 0..sites {
            edges.push(HexEdge {
                a: x as u32,
                b: (sites + x) as u32,
                kind: EdgeKind::Q,
            });
            edges.push(HexEdge {
                a: x as u32,
                b: (sites + geom.up(x)) as u32,
                kind: EdgeKind::J,
            });
            edges.push(HexEdge {
                a: x as u32,
                b: (sites + geom.right(x)) as u32,
                kind: EdgeKind::J,
            });
        }
        let mut incident = vec![[u32::MAX; 3]; 2 * sites];
        let mut fill = vec![0usize; 2 * sites];
        for (e, edge) in edges.iter().enumerate() {
            for v in [edge.a as usize, edge.b as usize] {
                incident[v][fill[v]] = e as u32;
                fill[v] += 1;
            }
        }
        debug_assert!(fill.iter().all(|&f| f == 3));
        HexGraph { n, edges, incident }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.n * self.n
    }

    /// Number of vertices, `2 n²`.
    pub fn vertices(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn edges(&self) -> &[HexEdge] {
        &self.edges
    }

    /// Vertex id of `x¹`.
    pub fn layer1(&self, site: usize) -> usize {
        site
    }

    /// Vertex id of `x²`.
    pub fn layer2(&self, site: usize) -> usize {
        self.sites() + site
    }

    pub fn is_layer1(&self, vertex: usize) -> bool {
        vertex < self.sites()
    }

    /// Site underlying a vertex of either layer.
    pub fn site_of(&self, vertex: usize) -> usize {
        vertex % self.sites()
    }

    /// The three edge indices incident to a vertex.
    pub fn incident(&self, vertex: usize) -> [u32; 3] {
        self.incident[vertex]
    }

    /// Anti-diagonal slice index of a vertex.
    ///
    /// J-edges connect vertices within one slice; q-edges connect adjacent
    /// slices, so every path crossing `k` slice boundaries crosses at least
    /// `k` q-edges.
    pub fn slice_index(&self, vertex: usize) -> usize {
        let (r, c) = ((vertex % self.sites()) / self.n, vertex % self.n);
        if self.is_layer1(vertex) {
            (r + c) % self.n
        } else {
            (r + c + self.n - 1) % self.n
        }
    }
}

/// Diagonal slice geometry for a displacement `ell`: the four corner sites of
/// the correlation experiment and the anti-diagonal path `γ*` joining
/// `(0,ell)¹` to `(ell,0)¹` inside a single slice.
///
/// `γ*` alternates up- and right-J-edges through layer 2, uses exactly
/// `2 ell` J-edges, and its edge boundary consists of 2 J-edges (at the two
/// endpoints) plus `2 ell + 1` q-edges (one per path vertex).
#[derive(Clone, Debug)]
pub struct SliceGeometry {
    pub ell: usize,
    /// Layer-1 vertex `(0,0)¹` (diagonal start).
    pub diag_from: usize,
    /// Layer-1 vertex `(ell,ell)¹` (diagonal end).
    pub diag_to: usize,
    /// Layer-1 vertex `(0,ell)¹` (anti-diagonal start, γ* endpoint).
    pub anti_from: usize,
    /// Layer-1 vertex `(ell,0)¹` (anti-diagonal end, γ* endpoint).
    pub anti_to: usize,
    /// Vertices of γ* in path order, `2 ell + 1` of them.
    pub gamma_star_vertices: Vec<u32>,
    /// Edge indices of γ* in path order, `2 ell` of them (all J-edges).
    pub gamma_star_edges: Vec<u32>,
    /// Edge indices of the edge boundary ∂γ*: incident to γ* but not on it.
    pub boundary_edges: Vec<u32>,
}

impl SliceGeometry {
    pub fn new(graph: &HexGraph, geom: &TorusGeometry, ell: usize) -> Result<Self> {
        let n = geom.n();
        if ell == 0 || 2 * ell >= n {
            return Err(Error::SliceOutOfRange {
                ell,
                max: n as f64 / 2.0,
            });
        }
        let mut vertices: Vec<u32> = Vec::with_capacity(2 * ell + 1);
        let mut path_edges: Vec<u32> = Vec::with_capacity(2 * ell);
        // (k, ell-k)¹ --up-edge--> (k+1, ell-k)² --right-edge--> (k+1, ell-k-1)¹
        vertices.push(graph.layer1(geom.site(0, ell)) as u32);
        for k in 0..ell {
            let s = geom.site(k, ell - k);
            path_edges.push((3 * s + 1) as u32);
            vertices.push(graph.layer2(geom.site(k + 1, ell - k)) as u32);
            let s_next = geom.site(k + 1, ell - k - 1);
            path_edges.push((3 * s_next + 2) as u32);
            vertices.push(graph.layer1(s_next) as u32);
        }
        let on_path: std::collections::HashSet<u32> = path_edges.iter().copied().collect();
        let mut boundary: Vec<u32> = Vec::new();
        let mut seen: std::collections::HashSet<u32> = std::collections::HashSet::new();
        for &v in &vertices {
            for e in graph.incident(v as usize) {
                if !on_path.contains(&e) && seen.insert(e) {
                    boundary.push(e);
                }
            }
        }
        boundary.sort_unstable();
        Ok(SliceGeometry {
            ell,
            diag_from: graph.layer1(geom.site(0, 0)),
            diag_to: graph.layer1(geom.site(ell, ell)),
            anti_from: vertices[0] as usize,
            anti_to: *vertices.last().unwrap() as usize,
            gamma_star_vertices: vertices,
            gamma_star_edges: path_edges,
            boundary_edges: boundary,
        })
    }
}
