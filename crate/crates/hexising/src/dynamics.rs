//! The shaken dynamics: alternating parallel heat-bath half-steps on the two
//! layers, its monotone grand coupling, and coupling-from-the-past perfect
//! sampling of the pair measure with projection to the layer-1 marginal.
//!
//! A half-step freezes one layer and redraws every site of the other layer
//! simultaneously from its heat-bath conditional, which is exactly the Gibbs
//! conditional of the pair measure given the frozen layer. Randomness is
//! addressed by `(seed, half-step, site)`, so trajectories are independent of
//! update order and thread count, and coupling-from-the-past can re-read the
//! randomness of past epochs.

use rayon::prelude::*;

use crate::lattice::TorusGeometry;
use crate::measures::{Layer, Params, SpinLayer, SpinPair};
use crate::rng::{CounterRng, Stream};
use crate::{Error, Result};

/// Default cap on coupling-from-the-past epochs, in half-steps.
pub const DEFAULT_CFTP_CAP: u64 = 1 << 20;

/// Below this many sites a half-step runs sequentially; the per-site values
/// are identical either way because randomness is addressed, not consumed.
const PAR_SITE_THRESHOLD: usize = 4096;

/// Uniform variates addressed by `(half-step, site)`, optionally restricted
/// to a window of half-steps (coupling-from-the-past hands out sheets scoped
/// to one epoch).
#[derive(Clone, Copy, Debug)]
pub struct RandomnessSheet {
    rng: CounterRng,
    window: Option<(u64, u64)>,
}

impl RandomnessSheet {
    pub fn new(seed: u64) -> Self {
        RandomnessSheet {
            rng: CounterRng::new(seed),
            window: None,
        }
    }

    /// Sheet valid only for half-steps in `[lo, hi)`.
    pub fn windowed(seed: u64, lo: u64, hi: u64) -> Self {
        RandomnessSheet {
            rng: CounterRng::new(seed),
            window: Some((lo, hi)),
        }
    }

    pub fn covers(&self, half_step: u64) -> bool {
        match self.window {
            None => true,
            Some((lo, hi)) => (lo..hi).contains(&half_step),
        }
    }

    /// Uniform in `[0, 1)` for one site at one half-step.
    #[inline]
    pub fn uniform(&self, half_step: u64, site: usize) -> f64 {
        self.rng.at(Stream::HalfStep, half_step).uniform(site as u64)
    }
}

/// Chain state: the spin pair and the number of half-steps taken. Even
/// counters update layer 1 next, odd counters layer 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainState {
    pub pair: SpinPair,
    pub half_steps: u64,
}

impl ChainState {
    pub fn new(pair: SpinPair) -> Self {
        ChainState {
            pair,
            half_steps: 0,
        }
    }

    pub fn active_layer(&self) -> Layer {
        if self.half_steps % 2 == 0 {
            Layer::One
        } else {
            Layer::Two
        }
    }
}

/// Heat-bath acceptance probabilities for the six possible local fields
/// `h = J * s_nn + q * s_same` with `s_nn ∈ {-2, 0, 2}`, `s_same ∈ {-1, 1}`:
/// `P(+1) = e^h / (e^h + e^{-h})`.
#[derive(Clone, Copy, Debug)]
struct HeatBath {
    p_plus: [f64; 6],
}

impl HeatBath {
    fn new(params: &Params) -> Self {
        let mut p_plus = [0.0; 6];
        for (slot, p) in p_plus.iter_mut().enumerate() {
            let s_nn = (slot / 2) as f64 * 2.0 - 2.0;
            let s_same = (slot % 2) as f64 * 2.0 - 1.0;
            let h = params.j * s_nn + params.q * s_same;
            *p = 1.0 / (1.0 + (-2.0 * h).exp());
        }
        HeatBath { p_plus }
    }

    #[inline(always)]
    fn index(s_nn: i8, s_same: i8) -> usize {
        ((s_nn + 2) as usize / 2) * 2 + (s_same + 1) as usize / 2
    }
}

/// Overwrite the active layer of `pair` with the parallel heat-bath update
/// read from the frozen opposite layer, drawing site uniforms from `draw`.
fn update_layer_with(
    pair: &mut SpinPair,
    layer: Layer,
    geom: &TorusGeometry,
    lut: &HeatBath,
    draw: impl Fn(usize) -> f64 + Sync,
) {
    let sites = geom.sites();
    match layer {
        Layer::One => {
            let frozen = &pair.layer2;
            let site_value = |x: usize| -> i8 {
                let s_nn = frozen.get(geom.up(x)) + frozen.get(geom.right(x));
                let p = lut.p_plus[HeatBath::index(s_nn, frozen.get(x))];
                if draw(x) < p {
                    1
                } else {
                    -1
                }
            };
            let out = pair.layer1.as_mut_slice();
            if sites >= PAR_SITE_THRESHOLD {
                out.par_iter_mut()
                    .enumerate()
                    .for_each(|(x, s)| *s = site_value(x));
            } else {
                for (x, s) in out.iter_mut().enumerate() {
                    *s = site_value(x);
                }
            }
        }
        Layer::Two => {
            let frozen = &pair.layer1;
            let site_value = |x: usize| -> i8 {
                let s_nn = frozen.get(geom.down(x)) + frozen.get(geom.left(x));
                let p = lut.p_plus[HeatBath::index(s_nn, frozen.get(x))];
                if draw(x) < p {
                    1
                } else {
                    -1
                }
            };
            let out = pair.layer2.as_mut_slice();
            if sites >= PAR_SITE_THRESHOLD {
                out.par_iter_mut()
                    .enumerate()
                    .for_each(|(x, s)| *s = site_value(x));
            } else {
                for (x, s) in out.iter_mut().enumerate() {
                    *s = site_value(x);
                }
            }
        }
    }
}

/// One parallel heat-bath half-step: all sites of the active layer update
/// simultaneously against the frozen opposite layer, then the counter
/// increments.
pub fn half_step(
    mut state: ChainState,
    params: &Params,
    geom: &TorusGeometry,
    sheet: &RandomnessSheet,
) -> Result<ChainState> {
    if !sheet.covers(state.half_steps) {
        return Err(Error::MissingRandomness {
            half_step: state.half_steps,
        });
    }
    let lut = HeatBath::new(params);
    let layer = state.active_layer();
    let t = state.half_steps;
    update_layer_with(&mut state.pair, layer, geom, &lut, |site| {
        sheet.uniform(t, site)
    });
    state.half_steps += 1;
    Ok(state)
}

/// Two half-steps: layer 1 then layer 2.
pub fn shaken_sweep(
    state: ChainState,
    params: &Params,
    geom: &TorusGeometry,
    sheet: &RandomnessSheet,
) -> Result<ChainState> {
    half_step(half_step(state, params, geom, sheet)?, params, geom, sheet)
}

/// Advance several chains one half-step under the same randomness sheet.
/// This is the grand coupling: chains share every site uniform, so the
/// componentwise partial order between states is preserved.
pub fn monotone_coupled_step(
    states: Vec<ChainState>,
    params: &Params,
    geom: &TorusGeometry,
    sheet: &RandomnessSheet,
) -> Result<Vec<ChainState>> {
    if let Some(first) = states.first() {
        if states.iter().any(|s| s.half_steps != first.half_steps) {
            return Err(Error::CounterMismatch);
        }
    }
    states
        .into_iter()
        .map(|s| half_step(s, params, geom, sheet))
        .collect()
}

/// A perfect sample drawn by coupling from the past.
#[derive(Clone, Debug)]
pub struct CftpSample {
    pub pair: SpinPair,
    /// The epoch (number of half-steps from the past) at which the extremal
    /// chains had coalesced by time zero.
    pub epoch: u64,
    /// Total half-step updates spent across all epochs (both chains).
    pub work: u64,
}

/// Exact sampling from the pair measure by monotone coupling from the past.
///
/// Epochs double: the extremal chains start at times `-2, -4, -8, ...` from
/// all-plus and all-minus; the half-step at absolute time `-k` always reads
/// randomness address `k`, so later epochs re-use the randomness of earlier
/// ones exactly. Addresses with even `k` update layer 1. Fails explicitly
/// once the epoch would exceed `cap` half-steps (near-critical slowing, not
/// a bug).
pub fn cftp_sample(
    params: &Params,
    geom: &TorusGeometry,
    seed: u64,
    cap: u64,
) -> Result<CftpSample> {
    let sites = geom.sites();
    let lut = HeatBath::new(params);
    let rng = CounterRng::new(seed);
    let mut epoch: u64 = 2;
    let mut work: u64 = 0;
    loop {
        if epoch > cap {
            return Err(Error::CoalescenceCapExceeded { cap });
        }
        let mut top = SpinPair::constant(sites, 1);
        let mut bottom = SpinPair::constant(sites, -1);
        let mut coalesced = false;
        for k in (1..=epoch).rev() {
            let layer = if k % 2 == 0 { Layer::One } else { Layer::Two };
            let draws = rng.at(Stream::HalfStep, k);
            update_layer_with(&mut top, layer, geom, &lut, |site| {
                draws.uniform(site as u64)
            });
            work += 1;
            if !coalesced {
                update_layer_with(&mut bottom, layer, geom, &lut, |site| {
                    draws.uniform(site as u64)
                });
                work += 1;
                // once equal, the shared randomness keeps them equal
                coalesced = top == bottom;
            }
        }
        if coalesced {
            return Ok(CftpSample {
                pair: top,
                epoch,
                work,
            });
        }
        epoch *= 2;
    }
}

/// How to draw samples from the pair measure.
#[derive(Clone, Copy, Debug)]
pub enum SampleMode {
    /// Perfect samples via coupling from the past, one independent run per
    /// sample.
    Cftp { cap: u64 },
    /// Forward chain from all-plus: discard `burnin` sweeps, then keep every
    /// `thin`-th sweep.
    BurnIn { burnin: usize, thin: usize },
}

/// A batch of pair samples with the sampling metadata that produced it.
#[derive(Clone, Debug)]
pub struct PairSamples {
    pub pairs: Vec<SpinPair>,
    pub mode: SampleMode,
    /// Total sweeps advanced (burn-in mode) or total half-step work (CFTP).
    pub sweeps_used: u64,
}

/// Draw `count` samples from the pair measure.
pub fn sample_pairs(
    params: &Params,
    geom: &TorusGeometry,
    count: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<PairSamples> {
    match mode {
        SampleMode::Cftp { cap } => {
            let rng = CounterRng::new(seed);
            let mut pairs = Vec::with_capacity(count);
            let mut work = 0;
            for i in 0..count {
                let sub_seed = rng.derive_seed(Stream::Chain, i as u64);
                let sample = cftp_sample(params, geom, sub_seed, cap)?;
                work += sample.work;
                pairs.push(sample.pair);
            }
            Ok(PairSamples {
                pairs,
                mode,
                sweeps_used: work,
            })
        }
        SampleMode::BurnIn { burnin, thin } => {
            let thin = thin.max(1);
            let sheet = RandomnessSheet::new(seed);
            let mut state = ChainState::new(SpinPair::constant(geom.sites(), 1));
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..burnin {
                state = shaken_sweep(state, params, geom, &sheet)?;
            }
            while pairs.len() < count {
                for _ in 0..thin {
                    state = shaken_sweep(state, params, geom, &sheet)?;
                }
                pairs.push(state.pair.clone());
            }
            Ok(PairSamples {
                sweeps_used: state.half_steps / 2,
                pairs,
                mode,
            })
        }
    }
}

/// Layer-1 projections of pair samples: draws from the marginal measure π.
pub fn sample_pi(
    params: &Params,
    geom: &TorusGeometry,
    count: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<Vec<SpinLayer>> {
    Ok(sample_pairs(params, geom, count, mode, seed)?
        .pairs
        .into_iter()
        .map(|p| p.layer1)
        .collect())
}
