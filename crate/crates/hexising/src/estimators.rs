//! Monte Carlo observables with batch-means error bars, two-point
//! correlators along the two diagonals, cluster-connectivity frequencies,
//! and the analytic correlation bound constants.

use crate::dynamics::{sample_pairs, SampleMode};
use crate::lattice::{HexGraph, TorusGeometry};
use crate::measures::{Params, SpinLayer, SpinPair};
use crate::rcm::{bonds_given_spins, cluster_partition, spins_given_bonds};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Minimum number of batches for a batch-means error bar.
pub const MIN_BATCHES: usize = 20;

/// Point estimate with a one-sigma error bar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

/// A series of per-sample scalar observable values.
#[derive(Clone, Debug, Default)]
pub struct SampleSeries {
    pub values: Vec<f64>,
}

impl SampleSeries {
    pub fn new(values: Vec<f64>) -> Self {
        SampleSeries { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn push(&mut self, value: f64) {
        self.values.push(value);
    }

    fn require_batches(&self) -> Result<()> {
        if self.values.len() < MIN_BATCHES {
            return Err(Error::InsufficientSamples {
                needed: MIN_BATCHES,
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// Means of `MIN_BATCHES` equal batches (trailing remainder spread over
    /// the leading batches one sample at a time).
    fn batch_means(&self) -> Result<Vec<f64>> {
        self.require_batches()?;
        let n = self.values.len();
        let batches = MIN_BATCHES;
        let base = n / batches;
        let extra = n % batches;
        let mut means = Vec::with_capacity(batches);
        let mut start = 0;
        for b in 0..batches {
            let len = base + usize::from(b < extra);
            let slice = &self.values[start..start + len];
            means.push(slice.iter().sum::<f64>() / slice.len() as f64);
            start += len;
        }
        Ok(means)
    }

    /// Batch-means estimate of the series mean.
    pub fn mean_with_err(&self) -> Result<Estimate> {
        let means = self.batch_means()?;
        Ok(estimate_from_batches(&means))
    }
}

fn estimate_from_batches(means: &[f64]) -> Estimate {
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b - 1.0);
    Estimate {
        value: mean,
        err: (var / b).sqrt(),
    }
}

/// Jackknife over batches for a statistic built from batch-aggregated sums.
fn jackknife(batch_sums: &[Vec<f64>], stat: impl Fn(&[f64]) -> f64) -> Estimate {
    let b = batch_sums.len();
    let dims = batch_sums[0].len();
    let mut totals = vec![0.0; dims];
    for sums in batch_sums {
        for (t, s) in totals.iter_mut().zip(sums) {
            *t += s;
        }
    }
    let full = stat(&totals);
    let mut leave_out = Vec::with_capacity(b);
    for sums in batch_sums {
        let reduced: Vec<f64> = totals.iter().zip(sums).map(|(t, s)| t - s).collect();
        leave_out.push(stat(&reduced));
    }
    let mean_loo = leave_out.iter().sum::<f64>() / b as f64;
    let var = leave_out
        .iter()
        .map(|v| (v - mean_loo) * (v - mean_loo))
        .sum::<f64>()
        * (b as f64 - 1.0)
        / b as f64;
    Estimate {
        value: full,
        err: var.sqrt(),
    }
}

/// Magnetization per site, in `[-1, 1]`.
pub fn magnetization(layer: &SpinLayer) -> f64 {
    layer.sum() as f64 / layer.len() as f64
}

fn moment_batches(series: &SampleSeries) -> Result<Vec<Vec<f64>>> {
    series.require_batches()?;
    let n = series.values.len();
    let batches = MIN_BATCHES;
    let base = n / batches;
    let extra = n % batches;
    let mut out = Vec::with_capacity(batches);
    let mut start = 0;
    for b in 0..batches {
        let len = base + usize::from(b < extra);
        let slice = &series.values[start..start + len];
        let mut sums = vec![0.0; 4]; // count, |m|, m^2, m^4
        for &m in slice {
            sums[0] += 1.0;
            sums[1] += m.abs();
            sums[2] += m * m;
            sums[3] += m * m * m * m;
        }
        out.push(sums);
        start += len;
    }
    Ok(out)
}

/// Binder cumulant `U = 1 - <m^4> / (3 <m^2>^2)` of a magnetization series,
/// with a jackknife-over-batches error bar.
pub fn binder_cumulant(series: &SampleSeries) -> Result<Estimate> {
    let batches = moment_batches(series)?;
    Ok(jackknife(&batches, |sums| {
        let m2 = sums[2] / sums[0];
        let m4 = sums[3] / sums[0];
        1.0 - m4 / (3.0 * m2 * m2)
    }))
}

/// Susceptibility `χ = n² (<m²> - <|m|>²)` of a magnetization series.
pub fn susceptibility(series: &SampleSeries, sites: usize) -> Result<Estimate> {
    let batches = moment_batches(series)?;
    Ok(jackknife(&batches, |sums| {
        let m_abs = sums[1] / sums[0];
        let m2 = sums[2] / sums[0];
        sites as f64 * (m2 - m_abs * m_abs)
    }))
}

/// Batch-means estimate of `<σ_x σ_y>` between two fixed sites.
pub fn two_point(
    samples: &[SpinLayer],
    geom: &TorusGeometry,
    x: (usize, usize),
    y: (usize, usize),
) -> Result<Estimate> {
    let sx = geom.site(x.0, x.1);
    let sy = geom.site(y.0, y.1);
    let series = SampleSeries::new(
        samples
            .iter()
            .map(|l| (l.get(sx) * l.get(sy)) as f64)
            .collect(),
    );
    series.mean_with_err()
}

/// Translation-averaged two-point estimate for a torus displacement vector:
/// each sample contributes the average of `σ_x σ_{x+d}` over all origins.
pub fn two_point_displacement(
    samples: &[SpinLayer],
    geom: &TorusGeometry,
    d: (usize, usize),
) -> Result<Estimate> {
    let sites = geom.sites();
    let partner: Vec<usize> = (0..sites)
        .map(|s| {
            let (r, c) = geom.coords(s);
            geom.site(r + d.0, c + d.1)
        })
        .collect();
    let series = SampleSeries::new(
        samples
            .iter()
            .map(|l| {
                let mut sum = 0i64;
                for s in 0..sites {
                    sum += (l.get(s) * l.get(partner[s])) as i64;
                }
                sum as f64 / sites as f64
            })
            .collect(),
    );
    series.mean_with_err()
}

/// Which chain generates the samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    /// Cluster (bond-then-spin) global sweeps.
    Fk,
    /// Shaken heat-bath sweeps.
    Shaken,
}

/// Sampling plan for correlation estimators.
#[derive(Clone, Copy, Debug)]
pub struct SamplePlan {
    pub sampler: Sampler,
    pub count: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
}

/// Draw layer-1 samples according to a plan.
pub fn draw_pi_samples(
    params: &Params,
    geom: &TorusGeometry,
    plan: &SamplePlan,
) -> Result<Vec<SpinLayer>> {
    match plan.sampler {
        Sampler::Shaken => Ok(sample_pairs(
            params,
            geom,
            plan.count,
            SampleMode::BurnIn {
                burnin: plan.burnin,
                thin: plan.thin,
            },
            plan.seed,
        )?
        .pairs
        .into_iter()
        .map(|p| p.layer1)
        .collect()),
        Sampler::Fk => {
            let graph = HexGraph::new(geom);
            let rng = CounterRng::new(plan.seed);
            let thin = plan.thin.max(1);
            let mut pair = SpinPair::constant(geom.sites(), 1);
            let mut step = 0u64;
            for _ in 0..plan.burnin {
                pair = crate::rcm::fk_sweep(&pair, params, &graph, &rng, step);
                step += 1;
            }
            let mut out = Vec::with_capacity(plan.count);
            while out.len() < plan.count {
                for _ in 0..thin {
                    pair = crate::rcm::fk_sweep(&pair, params, &graph, &rng, step);
                    step += 1;
                }
                out.push(pair.layer1.clone());
            }
            Ok(out)
        }
    }
}

/// Layer-1 magnetization series drawn according to a plan, streamed without
/// keeping configurations (the critical scan runs many of these).
pub fn magnetization_series(
    params: &Params,
    geom: &TorusGeometry,
    plan: &SamplePlan,
) -> Result<SampleSeries> {
    match plan.sampler {
        Sampler::Shaken => {
            let sheet = crate::dynamics::RandomnessSheet::new(plan.seed);
            let mut state =
                crate::dynamics::ChainState::new(SpinPair::constant(geom.sites(), 1));
            for _ in 0..plan.burnin {
                state = crate::dynamics::shaken_sweep(state, params, geom, &sheet)?;
            }
            let thin = plan.thin.max(1);
            let mut series = SampleSeries::default();
            while series.len() < plan.count {
                for _ in 0..thin {
                    state = crate::dynamics::shaken_sweep(state, params, geom, &sheet)?;
                }
                series.push(magnetization(&state.pair.layer1));
            }
            Ok(series)
        }
        Sampler::Fk => {
            let graph = HexGraph::new(geom);
            let rng = CounterRng::new(plan.seed);
            let thin = plan.thin.max(1);
            let mut pair = SpinPair::constant(geom.sites(), 1);
            let mut step = 0u64;
            for _ in 0..plan.burnin {
                pair = crate::rcm::fk_sweep(&pair, params, &graph, &rng, step);
                step += 1;
            }
            let mut series = SampleSeries::default();
            while series.len() < plan.count {
                for _ in 0..thin {
                    pair = crate::rcm::fk_sweep(&pair, params, &graph, &rng, step);
                    step += 1;
                }
                series.push(magnetization(&pair.layer1));
            }
            Ok(series)
        }
    }
}

/// The two correlation estimates of the anisotropy experiment, the analytic
/// bound constants, and the significance of the measured gap.
#[derive(Clone, Debug)]
pub struct AnisotropyReport {
    pub ell: usize,
    /// `<σ_(0,0) σ_(ell,ell)>`: the diagonal crosses `2 ell` q-edges.
    pub diagonal: Estimate,
    /// `<σ_(0,ell) σ_(ell,0)>`: the anti-diagonal runs inside one slice.
    pub anti_diagonal: Estimate,
    /// `anti_diagonal - diagonal`.
    pub gap: f64,
    /// `sqrt(err_d² + err_a²)`.
    pub combined_sigma: f64,
    /// `gap / combined_sigma`.
    pub significance: f64,
    pub bounds: BoundConstants,
}

/// Estimate the diagonal and anti-diagonal correlations at displacement
/// `ell` and attach the analytic bound constants. `ell = 0` returns exact
/// ones (same-site correlations) without sampling.
pub fn diag_vs_antidiag(
    params: &Params,
    geom: &TorusGeometry,
    ell: usize,
    plan: &SamplePlan,
) -> Result<AnisotropyReport> {
    if 2 * ell >= geom.n() {
        return Err(Error::SliceOutOfRange {
            ell,
            max: geom.n() as f64 / 2.0,
        });
    }
    if ell == 0 {
        let unit = Estimate {
            value: 1.0,
            err: 0.0,
        };
        return Ok(AnisotropyReport {
            ell,
            diagonal: unit,
            anti_diagonal: unit,
            gap: 0.0,
            combined_sigma: 0.0,
            significance: 0.0,
            bounds: bound_constants(params, 1)?,
        });
    }
    let samples = draw_pi_samples(params, geom, plan)?;
    let diagonal = two_point_displacement(&samples, geom, (ell, ell))?;
    let anti_diagonal =
        two_point_displacement(&samples, geom, (ell, geom.n() - ell))?;
    let gap = anti_diagonal.value - diagonal.value;
    let combined_sigma =
        (diagonal.err * diagonal.err + anti_diagonal.err * anti_diagonal.err).sqrt();
    Ok(AnisotropyReport {
        ell,
        diagonal,
        anti_diagonal,
        gap,
        combined_sigma,
        significance: if combined_sigma > 0.0 {
            gap / combined_sigma
        } else {
            f64::INFINITY
        },
        bounds: bound_constants(params, ell.max(1))?,
    })
}

/// Connectivity frequencies `Φ(u ↔ v)` for vertex pairs, estimated over the
/// bond configurations visited by the cluster chain.
pub fn fk_connectivity(
    params: &Params,
    graph: &HexGraph,
    pairs: &[(usize, usize)],
    plan: &SamplePlan,
) -> Result<Vec<Estimate>> {
    let rng = CounterRng::new(plan.seed);
    let thin = plan.thin.max(1);
    let mut state = SpinPair::constant(graph.sites(), 1);
    let mut step = 0u64;
    for _ in 0..plan.burnin {
        state = crate::rcm::fk_sweep(&state, params, graph, &rng, step);
        step += 1;
    }
    let mut series: Vec<SampleSeries> = vec![SampleSeries::default(); pairs.len()];
    for _ in 0..plan.count {
        for _ in 0..thin - 1 {
            state = crate::rcm::fk_sweep(&state, params, graph, &rng, step);
            step += 1;
        }
        let omega = bonds_given_spins(&state, params, graph, &rng, step);
        let part = cluster_partition(&omega, graph);
        for (series, &(u, v)) in series.iter_mut().zip(pairs) {
            series.push(part.same_cluster(u, v) as u8 as f64);
        }
        state = spins_given_bonds(&omega, graph, &rng, step);
        step += 1;
    }
    series.iter().map(|s| s.mean_with_err()).collect()
}

/// The analytic correlation bound constants at displacement `ell`.
///
/// `c1 = r^{2ell} / (1 - r)` with `r = 4 p_q p_J / (1 - p_J)`, defined only
/// when `r < 1` (the crossing-path series converges);
/// `c2 = 2 e^{-4J} (1 - e^{-2J})^{2ell} e^{-2q(2ell+1)}`.
///
/// `conditions_met` evaluates the two small-q sufficient conditions
/// `4 p_q / ((1-p_q)(1-p_J)) < 1/2` and
/// `(p_q/(1-p_q))² < (1-p_J)³ (1-p_q) / 16`.
/// Together they imply `c1 < c2` for every `ell >= 2`; at `ell = 1` a thin
/// sliver of the condition region escapes the implication (see the module
/// tests for a pinned counterexample), so compare `c1` and `c2` directly
/// when the ordering matters.
#[derive(Clone, Copy, Debug)]
pub struct BoundConstants {
    pub ell: usize,
    /// Upper-bound constant for the diagonal correlation; `None` when the
    /// series diverges (`ratio >= 1`).
    pub c1: Option<f64>,
    /// Lower-bound constant for the anti-diagonal correlation.
    pub c2: f64,
    /// The series ratio `4 p_q p_J / (1 - p_J)`.
    pub ratio: f64,
    pub conditions_met: bool,
}

pub fn bound_constants(params: &Params, ell: usize) -> Result<BoundConstants> {
    if ell == 0 {
        return Err(Error::InvalidParameter(
            "bound constants need ell >= 1".into(),
        ));
    }
    let (p_j, p_q) = (params.p_j, params.p_q);
    let ratio = 4.0 * p_q * p_j / (1.0 - p_j);
    let c1 = if ratio < 1.0 {
        Some(ratio.powi(2 * ell as i32) / (1.0 - ratio))
    } else {
        None
    };
    let c2 = 2.0
        * (-4.0 * params.j).exp()
        * (1.0 - (-2.0 * params.j).exp()).powi(2 * ell as i32)
        * (-2.0 * params.q * (2.0 * ell as f64 + 1.0)).exp();
    let cond1 = 4.0 * p_q / ((1.0 - p_q) * (1.0 - p_j)) < 0.5;
    let cond2 = (p_q / (1.0 - p_q)).powi(2) < (1.0 - p_j).powi(3) * (1.0 - p_q) / 16.0;
    Ok(BoundConstants {
        ell,
        c1,
        c2,
        ratio,
        conditions_met: cond1 && cond2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::rng::Stream;

    #[test]
    fn magnetization_values() {
        assert_eq!(magnetization(&SpinLayer::all_plus(16)), 1.0);
        let geom = TorusGeometry::new(4).unwrap();
        let mut checker = SpinLayer::all_plus(16);
        for s in 0..16 {
            let (r, c) = geom.coords(s);
            checker.set(s, if (r + c) % 2 == 0 { 1 } else { -1 });
        }
        assert_eq!(magnetization(&checker), 0.0);
        let mut one_down = SpinLayer::all_plus(16);
        one_down.flip(5);
        assert!((magnetization(&one_down) - 14.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn error_bars_require_twenty_batches() {
        let short = SampleSeries::new(vec![1.0; 19]);
        assert!(matches!(
            short.mean_with_err(),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(SampleSeries::new(vec![1.0; 20]).mean_with_err().is_ok());
    }

    #[test]
    fn binder_limits() {
        // m = +-1 coin: <m^4> = <m^2>^2 = 1, U = 2/3 exactly
        let rng = CounterRng::new(3).at(Stream::Aux, 0);
        let coin = SampleSeries::new((0..4000).map(|i| rng.sign(i) as f64).collect());
        let u = binder_cumulant(&coin).unwrap();
        assert!((u.value - 2.0 / 3.0).abs() < 1e-12);

        // gaussian m: <m^4> = 3 <m^2>^2, U -> 0
        let draws = CounterRng::new(8).at(Stream::Aux, 1);
        let mut values = Vec::with_capacity(200_000);
        for i in 0..100_000u64 {
            let u1 = 1.0 - draws.uniform(2 * i);
            let u2 = draws.uniform(2 * i + 1);
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
            values.push(r * c);
            values.push(r * s);
        }
        let u = binder_cumulant(&SampleSeries::new(values)).unwrap();
        assert!(u.value.abs() < 0.01, "U = {} +- {}", u.value, u.err);
        assert!(u.value.abs() < 5.0 * u.err.max(1e-3));
    }

    #[test]
    fn susceptibility_vanishes_for_frozen_magnitude() {
        let rng = CounterRng::new(5).at(Stream::Aux, 2);
        let coin = SampleSeries::new((0..1000).map(|i| rng.sign(i) as f64).collect());
        let chi = susceptibility(&coin, 64).unwrap();
        assert!(chi.value.abs() < 1e-12);
    }

    #[test]
    fn deep_ordered_phase_binder_near_two_thirds() {
        let geom = TorusGeometry::new(16).unwrap();
        let params = Params::new(1.5, 1.5).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Fk,
            count: 2000,
            burnin: 200,
            thin: 1,
            seed: 99,
        };
        let samples = draw_pi_samples(&params, &geom, &plan).unwrap();
        let series = SampleSeries::new(samples.iter().map(magnetization).collect());
        let u = binder_cumulant(&series).unwrap();
        assert!(
            (u.value - 2.0 / 3.0).abs() < 0.02,
            "U = {} +- {}",
            u.value,
            u.err
        );
    }

    #[test]
    fn two_point_same_site_is_one() {
        let samples = vec![SpinLayer::all_plus(16); 40];
        let geom = TorusGeometry::new(4).unwrap();
        let est = two_point(&samples, &geom, (1, 2), (1, 2)).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.err, 0.0);
    }

    #[test]
    fn two_point_matches_oracle_at_n2() {
        let geom = TorusGeometry::new(2).unwrap();
        let params = Params::new(0.5, 0.5).unwrap();
        let (exact, _) = oracle::exact_two_point(2, &params, (0, 0), (0, 1)).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Shaken,
            count: 40_000,
            burnin: 500,
            thin: 1,
            seed: 12,
        };
        let samples = draw_pi_samples(&params, &geom, &plan).unwrap();
        let est = two_point(&samples, &geom, (0, 0), (0, 1)).unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.err,
            "{} +- {} vs exact {exact}",
            est.value,
            est.err
        );
    }

    #[test]
    fn two_point_decoupled_is_noise() {
        let geom = TorusGeometry::new(2).unwrap();
        let params = Params::new(1e-4, 1e-4).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Shaken,
            count: 20_000,
            burnin: 100,
            thin: 1,
            seed: 4,
        };
        let samples = draw_pi_samples(&params, &geom, &plan).unwrap();
        let est = two_point(&samples, &geom, (0, 0), (1, 1)).unwrap();
        assert!(est.value.abs() < 3.0 * est.err + 1e-3);
    }

    /// Estimator observable functions applied to the exact-oracle-weighted
    /// enumeration must reproduce the oracle's own expectations exactly.
    #[test]
    fn estimators_consistent_with_exact_enumeration() {
        let params = Params::new(0.6, 0.9).unwrap();
        let geom = TorusGeometry::new(2).unwrap();
        let pi = oracle::marginal_pi(&oracle::enumerate_pi2(2, &params).unwrap());

        // weighted magnetization through the estimator observable
        let mut mean_m = 0.0;
        let mut corr = 0.0;
        let sx = geom.site(0, 0);
        let sy = geom.site(1, 1);
        for (bits, &p) in pi.probs.iter().enumerate() {
            let layer = SpinLayer::from_bits(4, bits as u64);
            mean_m += p * magnetization(&layer);
            corr += p * (layer.get(sx) * layer.get(sy)) as f64;
        }
        let report = oracle::exact_magnetization(2, &params).unwrap();
        assert!((mean_m - report.m).abs() < 1e-10);
        let (exact_corr, _) = oracle::exact_two_point(2, &params, (0, 0), (1, 1)).unwrap();
        assert!((corr - exact_corr).abs() < 1e-10);
    }

    #[test]
    fn anisotropy_report_trivial_at_zero_displacement() {
        let geom = TorusGeometry::new(8).unwrap();
        let params = Params::new(0.5, 0.5).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Fk,
            count: 100,
            burnin: 10,
            thin: 1,
            seed: 1,
        };
        let report = diag_vs_antidiag(&params, &geom, 0, &plan).unwrap();
        assert_eq!(report.diagonal.value, 1.0);
        assert_eq!(report.anti_diagonal.value, 1.0);
    }

    #[test]
    fn anisotropy_report_at_homogeneous_point_emits() {
        // no directional claim is tested at J = q; the report just exists
        let geom = TorusGeometry::new(12).unwrap();
        let params = Params::new(0.66, 0.66).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Fk,
            count: 400,
            burnin: 100,
            thin: 1,
            seed: 2,
        };
        let report = diag_vs_antidiag(&params, &geom, 2, &plan).unwrap();
        assert!(report.diagonal.value.is_finite());
        assert!(report.anti_diagonal.value.is_finite());
        assert!(report.combined_sigma > 0.0);
    }

    #[test]
    fn connectivity_present_at_strong_coupling() {
        let geom = TorusGeometry::new(4).unwrap();
        let graph = HexGraph::new(&geom);
        let params = Params::new(4.0, 4.0).unwrap(); // p_e -> 1
        let plan = SamplePlan {
            sampler: Sampler::Fk,
            count: 200,
            burnin: 20,
            thin: 1,
            seed: 3,
        };
        let ests = fk_connectivity(&params, &graph, &[(0, 5), (2, 11)], &plan).unwrap();
        for est in ests {
            assert!(est.value > 0.99);
        }
    }

    #[test]
    fn connectivity_matches_oracle_at_n2() {
        let geom = TorusGeometry::new(2).unwrap();
        let graph = HexGraph::new(&geom);
        let params = Params::new(0.5, 0.5).unwrap();
        let (_, exact) = oracle::exact_two_point(2, &params, (0, 0), (0, 1)).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Fk,
            count: 40_000,
            burnin: 500,
            thin: 1,
            seed: 21,
        };
        let u = graph.layer1(geom.site(0, 0));
        let v = graph.layer1(geom.site(0, 1));
        let est = &fk_connectivity(&params, &graph, &[(u, v)], &plan).unwrap()[0];
        assert!(
            (est.value - exact).abs() < 3.0 * est.err,
            "{} +- {} vs exact {exact}",
            est.value,
            est.err
        );
    }

    #[test]
    fn spin_and_fk_routes_agree_at_n8() {
        let geom = TorusGeometry::new(8).unwrap();
        let graph = HexGraph::new(&geom);
        let params = Params::new(0.8, 0.8).unwrap();
        let plan = SamplePlan {
            sampler: Sampler::Fk,
            count: 8000,
            burnin: 500,
            thin: 1,
            seed: 31,
        };
        let samples = draw_pi_samples(&params, &geom, &plan).unwrap();
        let spin_side = two_point(&samples, &geom, (0, 0), (0, 1)).unwrap();
        let fk_plan = SamplePlan { seed: 32, ..plan };
        let u = graph.layer1(geom.site(0, 0));
        let v = graph.layer1(geom.site(0, 1));
        let fk_side = &fk_connectivity(&params, &graph, &[(u, v)], &fk_plan).unwrap()[0];
        let sigma = (spin_side.err.powi(2) + fk_side.err.powi(2)).sqrt();
        assert!(
            (spin_side.value - fk_side.value).abs() < 3.0 * sigma,
            "spin {} +- {} vs fk {} +- {}",
            spin_side.value,
            spin_side.err,
            fk_side.value,
            fk_side.err
        );
    }

    #[test]
    fn bound_constants_fig6_parameters() {
        // at J = 2.0, q = 0.03 the crossing-path series ratio exceeds one,
        // so c1 is undefined and the small-q sufficient conditions fail;
        // direct evaluation: r = 4 p_q p_J / (1-p_J) ~ 12.49
        let params = Params::new(2.0, 0.03).unwrap();
        let b = bound_constants(&params, 4).unwrap();
        assert!((b.ratio - 12.485).abs() < 0.01, "ratio {}", b.ratio);
        assert!(b.c1.is_none());
        assert!(!b.conditions_met);
        assert!(b.c2 > 0.0);
    }

    #[test]
    fn bound_constants_small_q_regime() {
        let params = Params::new(0.5, 0.01).unwrap();
        let b = bound_constants(&params, 1).unwrap();
        assert!(b.conditions_met);
        let c1 = b.c1.expect("series converges");
        assert!(c1 < b.c2, "c1 {} vs c2 {}", c1, b.c2);
        // independent transcription of the closed forms
        let p_j = 1.0 - (-1.0f64).exp();
        let p_q = 1.0 - (-0.02f64).exp();
        let ratio = 4.0 * p_q * p_j / (1.0 - p_j);
        let c2 = 2.0 * (-2.0f64).exp() * p_j * p_j * (-0.02f64 * 3.0).exp();
        assert!((b.ratio - ratio).abs() < 1e-14);
        assert!((c1 - ratio * ratio / (1.0 - ratio)).abs() < 1e-14);
        assert!((b.c2 - c2).abs() < 1e-14);
    }

    #[test]
    fn bound_constants_q_to_zero_limit() {
        let j = 0.8;
        let mut last_c1 = f64::INFINITY;
        for q in [0.03, 0.01, 0.001] {
            let params = Params::new(j, q).unwrap();
            let b = bound_constants(&params, 3).unwrap();
            let c1 = b.c1.expect("ratio below one for these q");
            assert!(c1 < last_c1);
            last_c1 = c1;
        }
        // q -> 0: c2 -> 2 e^{-4J} (1 - e^{-2J})^{2 ell}
        let params = Params::new(j, 1e-9).unwrap();
        let b = bound_constants(&params, 3).unwrap();
        let limit = 2.0 * (-4.0 * j).exp() * (1.0 - (-2.0 * j).exp()).powi(6);
        assert!((b.c2 - limit).abs() < 1e-6);
        assert!(b.c1.unwrap() < 1e-6);
    }

    #[test]
    fn bound_constants_divergent_ratio_reported() {
        let params = Params::new(1.0, 1.0).unwrap();
        let b = bound_constants(&params, 2).unwrap();
        assert!(b.ratio > 1.0);
        assert!(b.c1.is_none());
        assert!(!b.conditions_met);
        assert!(bound_constants(&params, 0).is_err());
    }

    /// Scan the valid region: wherever the sufficient conditions hold, the
    /// bound ordering c1 < c2 must hold for every displacement ell >= 2.
    ///
    /// The printed conditions guarantee B = 4 p_q / ((1-p_q)(1-p_J)) < 1/2
    /// and B^2 < (1-p_J)(1-p_q); the ordering needs B^{2 ell} <
    /// (1-p_J)^2 (1-p_q), which follows for ell >= 2 but at ell = 1 is
    /// short one factor of (1-p_J). The sliver where ell = 1 escapes is
    /// pinned below.
    #[test]
    fn conditions_imply_bound_ordering() {
        let mut met = 0;
        for ji in 0..10 {
            for qi in 0..10 {
                let j = 0.2 + 0.2 * ji as f64;
                // log-spaced: the valid region shrinks fast in q as J grows
                let q = 1e-4 * (0.02f64 / 1e-4).powf(qi as f64 / 9.0);
                let params = Params::new(j, q).unwrap();
                for ell in [2, 3, 4] {
                    let b = bound_constants(&params, ell).unwrap();
                    if b.conditions_met {
                        met += 1;
                        let c1 = b.c1.expect("conditions imply convergence");
                        assert!(
                            c1 < b.c2,
                            "J={j} q={q} ell={ell}: c1={c1} c2={}",
                            b.c2
                        );
                    }
                }
            }
        }
        assert!(met >= 100, "valid region too small in scan: {met}");
    }

    /// At ell = 1 the printed sufficient conditions do not quite close the
    /// c1 < c2 implication: J = 0.6, q = 0.014 meets both conditions yet
    /// has c1 > c2. Slightly smaller q restores the ordering.
    #[test]
    fn ell_one_sliver_counterexample() {
        let params = Params::new(0.6, 0.014).unwrap();
        let b = bound_constants(&params, 1).unwrap();
        assert!(b.conditions_met);
        assert!(b.c1.unwrap() > b.c2, "counterexample vanished: {b:?}");

        let params = Params::new(0.6, 0.005).unwrap();
        let b = bound_constants(&params, 1).unwrap();
        assert!(b.conditions_met);
        assert!(b.c1.unwrap() < b.c2);
    }
}
