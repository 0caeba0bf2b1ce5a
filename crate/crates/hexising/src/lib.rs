//! Simulation and exact-enumeration toolkit for a two-parameter Ising system
//! on the square torus.
//!
//! The model couples two spin layers `(σ¹, σ²)` through an asymmetric pair
//! Hamiltonian with a nearest-neighbour strength `J` (up/right) and an
//! inertial strength `q` (same site). The layer-1 marginal `π` of the pair
//! Gibbs measure `π₂` is not a Gibbs measure on the square lattice, but `π₂`
//! itself is exactly the Ising Gibbs measure on a bipartite degree-3
//! (hexagonal) graph built from two copies of the torus. That representation
//! gives access to the random-cluster coupling, a cluster sweep, the
//! alternating parallel "shaken" heat-bath dynamics with monotone
//! coupling-from-the-past, and a closed-form critical curve
//! `J_c(q) = atanh(-tanh q + sqrt(tanh²q + 1))`.
//!
//! Module layout:
//!
//! - [`lattice`]: torus geometry, the hexagonal double-layer graph, diagonal
//!   slice geometry for correlation experiments
//! - [`measures`]: couplings, spin configurations, energies, local fields
//! - [`rcm`]: bond configurations, cluster counting, the two conditional
//!   samplers of the spin/bond coupling and the composed cluster sweep
//! - [`oracle`]: exact enumeration of all measures at tiny sizes; every other
//!   module is validated against these tables
//! - [`dynamics`]: shaken dynamics, monotone grand coupling, perfect sampling
//! - [`estimators`]: magnetization moments, Binder cumulant, susceptibility,
//!   two-point correlators, connectivity frequencies, correlation bound
//!   constants
//! - [`critical`]: critical curve (closed form, residual equation, root
//!   solver, even-subgraph re-derivation) and the Monte Carlo critical scan
//! - [`output`]: CSV / JSON-lines records and PGM snapshots
//! - [`runner`]: the experiment CLI behind the `hexising` binary
//!
//! Everything that consumes randomness draws it from counter-based streams
//! ([`rng`]), so a given seed reproduces results bit-for-bit at any thread
//! count.

pub mod critical;
pub mod dynamics;
pub mod estimators;
pub mod lattice;
pub mod measures;
pub mod oracle;
pub mod output;
pub mod rcm;
pub mod rng;
pub mod runner;

pub use lattice::{EdgeKind, HexGraph, SliceGeometry, TorusGeometry};
pub use measures::{Layer, Params, SpinLayer, SpinPair};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("torus linear size must be at least 2, got {0}")]
    LatticeTooSmall(usize),

    #[error("slice displacement {ell} out of range (need 0 < ell < n/2 = {max})")]
    SliceOutOfRange { ell: usize, max: f64 },

    #[error("enumeration over {bits} bits exceeds the {cap}-bit budget")]
    EnumerationBudget { bits: usize, cap: usize },

    #[error("edge probability {0} is degenerate; log-weights need 0 < p < 1")]
    DegenerateEdgeProbability(f64),

    #[error("randomness sheet does not cover half-step {half_step}")]
    MissingRandomness { half_step: u64 },

    #[error("coupled chains must share a half-step counter")]
    CounterMismatch,

    #[error("no coalescence within the cap of {cap} half-steps")]
    CoalescenceCapExceeded { cap: u64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
