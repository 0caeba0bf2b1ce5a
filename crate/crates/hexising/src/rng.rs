//! Counter-based randomness.
//!
//! Every variate is a pure function of `(seed, stream, step, index)`. Nothing
//! here carries mutable state, so samplers can be evaluated in any order and
//! on any number of threads and still produce identical bits. This is what
//! lets coupling-from-the-past re-read its past randomness and lets the
//! `--threads` flag never change results.

/// Weyl increment of SplitMix64.
pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

const SEED_SALT: u64 = 0x6A09_E667_F3BC_C909;
const STREAM_MUL: u64 = 0xD6E8_FEB8_6659_FD93;
const STEP_MUL: u64 = 0xCA5A_8263_9512_1157;

/// SplitMix64 finalizer (Stafford mix 13).
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline(always)]
fn to_unit(bits: u64) -> f64 {
    // 53 high bits -> [0, 1)
    (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Named sub-streams. Distinct consumers draw from distinct streams so one
/// module can never alias another's randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// Per-site heat-bath uniforms, one step per half-step counter.
    HalfStep = 1,
    /// Per-edge bond openings, one step per cluster sweep.
    Bond = 2,
    /// Per-cluster spin signs, one step per cluster sweep.
    ClusterSpin = 3,
    /// Derivation of independent sub-chain seeds.
    Chain = 4,
    /// Scratch stream for tests and parameter draws.
    Aux = 5,
}

/// Root of a counter-based randomness tree.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Handle for indexed draws at a fixed `(stream, step)`.
    #[inline]
    pub fn at(&self, stream: Stream, step: u64) -> StepRng {
        let a = mix64(self.seed ^ SEED_SALT);
        let b = mix64(a ^ (stream as u64).wrapping_mul(STREAM_MUL));
        StepRng {
            base: mix64(b ^ step.wrapping_mul(STEP_MUL)),
        }
    }

    /// Deterministic sub-seed for an independent chain or task.
    pub fn derive_seed(&self, stream: Stream, k: u64) -> u64 {
        self.at(stream, k).raw(0)
    }
}

/// Indexed access into one `(seed, stream, step)` slice of the tree; `raw(i)`
/// is SplitMix64 evaluated at position `i` of that slice.
#[derive(Clone, Copy, Debug)]
pub struct StepRng {
    base: u64,
}

impl StepRng {
    #[inline(always)]
    pub fn raw(&self, index: u64) -> u64 {
        mix64(
            self.base
                .wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))),
        )
    }

    #[inline(always)]
    pub fn uniform(&self, index: u64) -> f64 {
        to_unit(self.raw(index))
    }

    /// Fair spin in {-1, +1}.
    #[inline(always)]
    pub fn sign(&self, index: u64) -> i8 {
        if self.raw(index) >> 63 == 0 {
            1
        } else {
            -1
        }
    }
}
