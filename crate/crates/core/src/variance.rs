//! Variance estimators for the allele-1 counts under drift and one or two
//! binomial sampling steps.
//!
//! Population 1 is the base population (generation 0) and is never subject
//! to drift. Population 2 is the evolved population observed `t`
//! generations later. Each population carries its own sampling model, so
//! mixed designs (e.g. individual sequencing of the base, pool sequencing of
//! the evolved population) are expressed directly.

use crate::error::{Error, Result};
use crate::stats::{classical_chi_square_variances, classical_cmh_variances, CountTable, VariancePair};

/// How the counts of one population were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingModel {
    /// A single binomial sampling step (individual sequencing of a sample,
    /// or pool sequencing of the whole population).
    OneStep,
    OneStepDrift,
    /// Allele sampling from the population followed by pool sequencing.
    TwoStep,
    TwoStepDrift,
}

impl SamplingModel {
    pub fn has_drift(self) -> bool {
        matches!(self, SamplingModel::OneStepDrift | SamplingModel::TwoStepDrift)
    }

    pub fn is_two_step(self) -> bool {
        matches!(self, SamplingModel::TwoStep | SamplingModel::TwoStepDrift)
    }

    pub fn with_drift(self, drift: bool) -> Self {
        match (self.is_two_step(), drift) {
            (false, false) => SamplingModel::OneStep,
            (false, true) => SamplingModel::OneStepDrift,
            (true, false) => SamplingModel::TwoStep,
            (true, true) => SamplingModel::TwoStepDrift,
        }
    }
}

/// Which statistic the variances feed. Only the classical one-step row
/// differs between the two (`n` vs `n - 1` in the pooled estimator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    ChiSquare,
    Cmh,
}

/// Read counts from pool sequencing plus the sizes of the allele samples
/// that were pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoStepCounts {
    pub reads: CountTable,
    /// Alleles sampled from each population before pooling (`x1p`, `x2p`).
    pub sample_sizes: [u64; 2],
}

impl TwoStepCounts {
    pub fn new(reads: CountTable, sample_sizes: [u64; 2]) -> Result<Self> {
        if reads.x1p() == 0 || reads.x2p() == 0 {
            return Err(Error::InvalidInput("two-step coverages must be at least 1".into()));
        }
        if sample_sizes.contains(&0) {
            return Err(Error::InvalidInput("two-step sample sizes must be at least 1".into()));
        }
        Ok(TwoStepCounts {
            reads,
            sample_sizes,
        })
    }

    pub fn r1(&self) -> u64 {
        self.reads.x1p()
    }
    pub fn r2(&self) -> u64 {
        self.reads.x2p()
    }
    pub fn m(&self) -> u64 {
        self.reads.n()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    OneStep(CountTable),
    TwoStep(TwoStepCounts),
}

impl Observation {
    /// The table entering the test statistic (reads for two-step data).
    pub fn table(&self) -> &CountTable {
        match self {
            Observation::OneStep(t) => t,
            Observation::TwoStep(t) => &t.reads,
        }
    }

    fn sample_sizes(&self) -> Option<[u64; 2]> {
        match self {
            Observation::OneStep(_) => None,
            Observation::TwoStep(t) => Some(t.sample_sizes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub pop1: SamplingModel,
    pub pop2: SamplingModel,
    pub ne: u64,
    /// Generations between the two compared time points.
    pub t: u32,
    /// Sequenced generations `0 = t_1 < ... < t_gamma = t`, when known.
    pub generation_times: Option<Vec<u32>>,
}

impl ScenarioSpec {
    pub fn new(
        pop1: SamplingModel,
        pop2: SamplingModel,
        ne: u64,
        t: u32,
        generation_times: Option<Vec<u32>>,
    ) -> Result<Self> {
        if pop1.has_drift() {
            return Err(Error::InvalidScenario(
                "drift applies to the evolved population only; population 1 is the base".into(),
            ));
        }
        if pop2.has_drift() && ne == 0 {
            return Err(Error::InvalidScenario("effective population size must be >= 1".into()));
        }
        if let Some(times) = &generation_times {
            if times.len() < 2 {
                return Err(Error::InvalidScenario("need at least two generation times".into()));
            }
            if times[0] != 0 || *times.last().unwrap() != t {
                return Err(Error::InvalidScenario(format!(
                    "generation times must start at 0 and end at t = {t}"
                )));
            }
            if times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidScenario("generation times must be strictly increasing".into()));
            }
        }
        Ok(ScenarioSpec {
            pop1,
            pop2,
            ne,
            t,
            generation_times,
        })
    }

    /// Classical test: one sampling step in both populations, no drift.
    pub fn classical() -> Self {
        ScenarioSpec {
            pop1: SamplingModel::OneStep,
            pop2: SamplingModel::OneStep,
            ne: 1,
            t: 0,
            generation_times: None,
        }
    }

    fn needs_trajectory(&self) -> bool {
        self.generation_times.as_ref().is_some_and(|g| g.len() > 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryPoint {
    pub generation: u32,
    /// Allele-1 count (reads, or sampled alleles for one-step data).
    pub count: u64,
    pub depth: u64,
}

/// Allele-1 counts of one evolving population across sequenced generations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocusTrajectory {
    points: Vec<TrajectoryPoint>,
}

impl LocusTrajectory {
    pub fn new(points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a trajectory needs at least two time points".into()));
        }
        for p in &points {
            if p.depth == 0 || p.count > p.depth {
                return Err(Error::InvalidInput(format!(
                    "generation {}: count {} with depth {}",
                    p.generation, p.count, p.depth
                )));
            }
        }
        if points.windows(2).any(|w| w[0].generation >= w[1].generation) {
            return Err(Error::InvalidInput("trajectory generations must be strictly increasing".into()));
        }
        Ok(LocusTrajectory { points })
    }

    /// Trajectory from `(generation, count, depth)` triples.
    pub fn from_counts(points: &[(u32, u64, u64)]) -> Result<Self> {
        LocusTrajectory::new(
            points
                .iter()
                .map(|&(generation, count, depth)| TrajectoryPoint {
                    generation,
                    count,
                    depth,
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn generations(&self) -> impl Iterator<Item = u32> + '_ {
        self.points.iter().map(|p| p.generation)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.count as f64 / p.depth as f64)
    }
}

/// `1 - (1 - 1/(2 ne))^t`, the fraction of heterozygosity lost to drift.
#[inline]
pub fn drift_factor(ne: u64, t: u32) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let per_gen = (-0.5 / ne as f64).ln_1p();
    -(t as f64 * per_gen).exp_m1()
}

/// Variance of the allele frequency after `t` generations of Wright-Fisher
/// drift, conditional on the starting frequency `p1`.
pub fn drift_variance_exact(p1: f64, ne: u64, t: u32) -> f64 {
    p1 * (1.0 - p1) * drift_factor(ne, t)
}

/// Estimate of `E[p2 | p1]`: the mean of the two row frequencies.
pub fn p2_hat(table: &CountTable) -> Result<f64> {
    match (table.freq1(), table.freq2()) {
        (Some(f1), Some(f2)) => Ok(0.5 * (f1 + f2)),
        _ => Err(Error::DegenerateMargin { replicate: None }),
    }
}

/// Plug-in drift variance using the population-1 frequency.
pub fn drift_var_hat(table: &CountTable, ne: u64, t: u32) -> Result<f64> {
    let f1 = table
        .freq1()
        .ok_or(Error::DegenerateMargin { replicate: None })?;
    Ok(drift_variance_exact(f1, ne, t))
}

/// Estimate of `E[p2 | p1]` from all sequenced generations.
pub fn p2_hat_timeseries(traj: &LocusTrajectory) -> f64 {
    traj.frequencies().sum::<f64>() / traj.len() as f64
}

/// Drift variance accumulated over consecutive sequenced intervals.
pub fn drift_var_timeseries(traj: &LocusTrajectory, ne: u64) -> f64 {
    traj.points
        .windows(2)
        .map(|w| {
            let f = w[0].count as f64 / w[0].depth as f64;
            f * (1.0 - f) * drift_factor(ne, w[1].generation - w[0].generation)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub pair: VariancePair,
    /// The expected-frequency estimate was pulled away from 0 or 1.
    pub clamped: bool,
}

/// Estimates `(s1_sq, s2_sq)` for one table under the given scenario.
///
/// The classical pooled estimator is used only when both populations are
/// plain one-step samples; any other combination uses per-population
/// estimators. `traj` switches the drift terms to their time-series forms.
pub fn estimate_variances(
    obs: &Observation,
    spec: &ScenarioSpec,
    traj: Option<&LocusTrajectory>,
    kind: StatisticKind,
) -> Result<VarianceEstimate> {
    let two_step = spec.pop1.is_two_step() || spec.pop2.is_two_step();
    let sizes = obs.sample_sizes();
    match (two_step, sizes.is_some()) {
        (true, false) => {
            return Err(Error::ScenarioMismatch(
                "two-step models need read counts with sample sizes".into(),
            ))
        }
        (false, true) => {
            return Err(Error::ScenarioMismatch(
                "two-step counts given for a one-step scenario".into(),
            ))
        }
        _ => {}
    }
    if spec.needs_trajectory() && traj.is_none() {
        return Err(Error::ScenarioMismatch(
            "intermediate generations declared but no trajectory given".into(),
        ));
    }
    if let (Some(times), Some(traj)) = (&spec.generation_times, traj) {
        if !traj.generations().eq(times.iter().copied()) {
            return Err(Error::ScenarioMismatch(
                "trajectory generations differ from the scenario's generation times".into(),
            ));
        }
    }

    let table = obs.table();
    if table.x1p() == 0 || table.x2p() == 0 {
        return Err(Error::DegenerateMargin { replicate: None });
    }

    if spec.pop1 == SamplingModel::OneStep && spec.pop2 == SamplingModel::OneStep {
        if kind == StatisticKind::Cmh && table.n() < 2 {
            return Err(Error::DegenerateMargin { replicate: None });
        }
        let pair = match kind {
            StatisticKind::ChiSquare => classical_chi_square_variances(table),
            StatisticKind::Cmh => classical_cmh_variances(table),
        };
        return Ok(VarianceEstimate {
            pair,
            clamped: false,
        });
    }

    let s1_sq = if spec.pop1.is_two_step() {
        two_step_binomial(table.x11, table.x12, sizes.unwrap()[0])
    } else {
        binomial_plugin(table.x11, table.x12)
    };

    let (p2, sigma2) = match spec.pop2.has_drift() {
        false => (0.0, 0.0),
        true => match traj {
            Some(traj) => (p2_hat_timeseries(traj), drift_var_timeseries(traj, spec.ne)),
            None => (p2_hat(table)?, drift_var_hat(table, spec.ne, spec.t)?),
        },
    };

    let mut clamped = false;
    let s2_sq = match spec.pop2 {
        SamplingModel::OneStep => binomial_plugin(table.x21, table.x22),
        SamplingModel::TwoStep => two_step_binomial(table.x21, table.x22, sizes.unwrap()[1]),
        SamplingModel::OneStepDrift => {
            let x2p = table.x2p() as f64;
            let (p, c) = clamp_frequency(p2, table.x2p());
            clamped = c;
            x2p * (p * (1.0 - p) + (x2p - 1.0) * sigma2)
        }
        SamplingModel::TwoStepDrift => {
            let r2 = table.x2p() as f64;
            let x2p = sizes.unwrap()[1] as f64;
            let (p, c) = clamp_frequency(p2, table.x2p());
            clamped = c;
            r2 * (p * (1.0 - p) * (1.0 + (r2 - 1.0) / x2p)
                + (r2 - 1.0) * (x2p - 1.0) / x2p * sigma2)
        }
    };

    Ok(VarianceEstimate {
        pair: VariancePair::new(s1_sq, s2_sq),
        clamped,
    })
}

/// `a * b / (a + b)`: binomial variance with the row's own frequency.
#[inline]
fn binomial_plugin(a: u64, b: u64) -> f64 {
    let total = (a + b) as f64;
    a as f64 * b as f64 / total
}

/// Binomial sampling of `sample_size` alleles, then binomial sampling of
/// `a + b` reads from that sample.
#[inline]
fn two_step_binomial(a: u64, b: u64, sample_size: u64) -> f64 {
    let reads = (a + b) as f64;
    binomial_plugin(a, b) * (1.0 + (reads - 1.0) / sample_size as f64)
}

/// Clamps `p` to `[1/(2 depth), 1 - 1/(2 depth)]`.
fn clamp_frequency(p: f64, depth: u64) -> (f64, bool) {
    let lo = 0.5 / depth as f64;
    let hi = 1.0 - lo;
    if p < lo {
        (lo, true)
    } else if p > hi {
        (hi, true)
    } else {
        (p, false)
    }
}
