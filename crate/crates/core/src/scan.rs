//! Per-locus evaluation: builds the scenario for each replicate from the
//! locus layout, estimates variances and computes the requested statistic.

use crate::error::{Error, Result};
use crate::locus::{LocusCounts, TimePoint};
use crate::stats::{
    chi_square_adapted, chi_square_classic, cmh_adapted, cmh_classic, CountTable, Flags, TestResult,
    VariancePair,
};
use crate::variance::{
    estimate_variances, LocusTrajectory, Observation, SamplingModel, ScenarioSpec, StatisticKind,
    TrajectoryPoint, TwoStepCounts,
};

/// What to compute for each locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestPlan {
    pub statistic: StatisticKind,
    /// `false` computes the textbook statistic on the observed counts.
    pub adapted: bool,
    /// Effective population size; `None` leaves drift out of the variances.
    pub ne: Option<u64>,
    /// Use all sequenced generations for the drift terms.
    pub intermediate: bool,
}

impl TestPlan {
    pub fn classical(statistic: StatisticKind) -> Self {
        TestPlan {
            statistic,
            adapted: false,
            ne: None,
            intermediate: false,
        }
    }

    pub fn adapted(statistic: StatisticKind, ne: u64, intermediate: bool) -> Self {
        TestPlan {
            statistic,
            adapted: true,
            ne: Some(ne),
            intermediate,
        }
    }

    /// Short method label, e.g. `CMH-adapted-ig`.
    pub fn label(&self) -> String {
        let stat = match self.statistic {
            StatisticKind::ChiSquare => "Q",
            StatisticKind::Cmh => "CMH",
        };
        match (self.adapted, self.intermediate) {
            (false, _) => format!("{stat}-classic"),
            (true, false) => format!("{stat}-adapted"),
            (true, true) => format!("{stat}-adapted-ig"),
        }
    }
}

/// Runs `plan` on one locus. Never fails: loci without a defined statistic
/// get `p = 1` and the `DEGENERATE_MARGIN` flag.
pub fn test_locus(counts: &LocusCounts, plan: &TestPlan) -> TestResult {
    let reps = match plan.statistic {
        StatisticKind::ChiSquare => &counts.replicates[..counts.replicates.len().min(1)],
        StatisticKind::Cmh => &counts.replicates[..],
    };
    let outcome = if plan.adapted {
        adapted(reps, plan)
    } else {
        classical(reps, plan.statistic)
    };
    outcome.unwrap_or_else(|_| TestResult::degenerate(Flags::empty()))
}

fn endpoints(tps: &[TimePoint]) -> Option<(TimePoint, TimePoint)> {
    (tps.len() >= 2).then(|| (tps[0], tps[tps.len() - 1]))
}

fn classical(reps: &[Vec<TimePoint>], kind: StatisticKind) -> Result<TestResult> {
    let tables: Vec<CountTable> = reps
        .iter()
        .filter_map(|tps| endpoints(tps))
        .map(|(a, b)| CountTable::from_rows(a.counts, b.counts))
        .collect();
    let statistic = match kind {
        StatisticKind::ChiSquare => chi_square_classic(tables.first().ok_or(Error::EmptyInput)?)?,
        StatisticKind::Cmh => {
            // strata with an empty row or column carry no information
            let usable: Vec<CountTable> = tables
                .into_iter()
                .filter(|t| !t.has_degenerate_margin() && t.n() >= 2)
                .collect();
            cmh_classic(&usable)?
        }
    };
    Ok(TestResult::from_statistic(statistic, Vec::new(), Flags::empty()))
}

fn adapted(reps: &[Vec<TimePoint>], plan: &TestPlan) -> Result<TestResult> {
    let mut tables = Vec::with_capacity(reps.len());
    let mut variances = Vec::with_capacity(reps.len());
    let mut flags = Flags::empty();
    for tps in reps {
        let Some((base, evolved)) = endpoints(tps) else {
            continue;
        };
        if CountTable::from_rows(base.counts, evolved.counts).has_degenerate_margin() {
            continue;
        }
        let (table, pair, clamped) = replicate_variances(tps, base, evolved, plan)?;
        if clamped {
            flags |= Flags::P2_CLAMPED;
        }
        tables.push(table);
        variances.push(pair);
    }
    if tables.is_empty() {
        return Err(Error::DegenerateMargin { replicate: None });
    }
    let statistic = match plan.statistic {
        StatisticKind::ChiSquare => chi_square_adapted(&tables[0], variances[0].s1_sq, variances[0].s2_sq)?,
        StatisticKind::Cmh => cmh_adapted(&tables, &variances)?,
    };
    Ok(TestResult::from_statistic(statistic, variances, flags))
}

fn replicate_variances(
    tps: &[TimePoint],
    base: TimePoint,
    evolved: TimePoint,
    plan: &TestPlan,
) -> Result<(CountTable, VariancePair, bool)> {
    let table = CountTable::from_rows(base.counts, evolved.counts);
    let t = evolved.generation.saturating_sub(base.generation);
    let drift = plan.ne.is_some() && t > 0;
    let model = |tp: &TimePoint| match tp.pool_size {
        Some(_) => SamplingModel::TwoStep,
        None => SamplingModel::OneStep,
    };
    let pop1 = model(&base);
    let pop2 = model(&evolved).with_drift(drift);

    let obs = if pop1.is_two_step() || pop2.is_two_step() {
        let sizes = [
            base.pool_size.unwrap_or(base.depth()),
            evolved.pool_size.unwrap_or(evolved.depth()),
        ];
        Observation::TwoStep(TwoStepCounts::new(table, sizes)?)
    } else {
        Observation::OneStep(table)
    };

    let trajectory = if drift && plan.intermediate && tps.len() > 2 {
        let points: Vec<TrajectoryPoint> = tps
            .iter()
            .filter(|tp| tp.depth() > 0)
            .map(|tp| TrajectoryPoint {
                generation: tp.generation - base.generation,
                count: tp.counts[0],
                depth: tp.depth(),
            })
            .collect();
        Some(LocusTrajectory::new(points)?)
    } else {
        None
    };
    let generation_times = trajectory.as_ref().map(|tr| tr.generations().collect());
    let spec = ScenarioSpec::new(pop1, pop2, plan.ne.unwrap_or(1), t, generation_times)?;
    let est = estimate_variances(&obs, &spec, trajectory.as_ref(), plan.statistic)?;
    Ok((table, est.pair, est.clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variance::{drift_var_hat, drift_var_timeseries, p2_hat, p2_hat_timeseries};

    fn tp(generation: u32, a: u64, b: u64, pool: Option<u64>) -> TimePoint {
        TimePoint {
            generation,
            counts: [a, b],
            pool_size: pool,
        }
    }

    #[test]
    fn classical_chi_square_dispatch() {
        let locus = LocusCounts::new(vec![vec![tp(0, 20, 10, None), tp(60, 10, 20, None)]]);
        let r = test_locus(&locus, &TestPlan::classical(StatisticKind::ChiSquare));
        assert!((r.statistic - 60.0 * 90000.0 / 810000.0).abs() < 1e-12);
    }

    #[test]
    fn two_step_drift_chi_square_matches_manual() {
        let pool = Some(1000);
        let locus = LocusCounts::new(vec![vec![tp(0, 50, 30, pool), tp(60, 30, 55, pool)]]);
        let r = test_locus(&locus, &TestPlan::adapted(StatisticKind::ChiSquare, 300, false));
        let t = CountTable::new(50, 30, 30, 55);
        let s1 = 50.0 * 30.0 / 80.0 * (1.0 + 79.0 / 1000.0);
        let p = p2_hat(&t).unwrap();
        let sigma = drift_var_hat(&t, 300, 60).unwrap();
        let s2 = 85.0 * (p * (1.0 - p) * (1.0 + 84.0 / 1000.0) + 84.0 * 999.0 / 1000.0 * sigma);
        let expected = chi_square_adapted(&t, s1, s2).unwrap();
        assert!((r.statistic - expected).abs() < 1e-12);
        assert_eq!(r.variances.len(), 1);
    }

    #[test]
    fn intermediate_generations_use_timeseries() {
        let pool = Some(1000);
        let locus = LocusCounts::new(vec![vec![
            tp(0, 50, 30, pool),
            tp(30, 40, 40, pool),
            tp(60, 30, 55, pool),
        ]]);
        let r = test_locus(&locus, &TestPlan::adapted(StatisticKind::ChiSquare, 300, true));
        let traj = LocusTrajectory::from_counts(&[(0, 50, 80), (30, 40, 80), (60, 30, 85)]).unwrap();
        let p = p2_hat_timeseries(&traj);
        let sigma = drift_var_timeseries(&traj, 300);
        let s2 = 85.0 * (p * (1.0 - p) * (1.0 + 84.0 / 1000.0) + 84.0 * 999.0 / 1000.0 * sigma);
        assert!((r.variances[0].s2_sq - s2).abs() < 1e-12);

        let endpoints_only = test_locus(&locus, &TestPlan::adapted(StatisticKind::ChiSquare, 300, false));
        assert_ne!(endpoints_only.statistic, r.statistic);
    }

    #[test]
    fn chi_square_uses_first_replicate_only() {
        let rep = |a| vec![tp(0, a, 40, None), tp(60, 30, 30, None)];
        let one = LocusCounts::new(vec![rep(20)]);
        let two = LocusCounts::new(vec![rep(20), rep(5)]);
        let plan = TestPlan::adapted(StatisticKind::ChiSquare, 300, false);
        assert_eq!(test_locus(&one, &plan), test_locus(&two, &plan));
    }

    #[test]
    fn cmh_adapted_has_pair_per_replicate() {
        let rep = |a| vec![tp(0, a, 40, None), tp(60, 30, 30, None)];
        let locus = LocusCounts::new(vec![rep(20), rep(25), rep(35)]);
        let r = test_locus(&locus, &TestPlan::adapted(StatisticKind::Cmh, 300, false));
        assert_eq!(r.variances.len(), 3);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn degenerate_locus_is_flagged() {
        let locus = LocusCounts::new(vec![vec![tp(0, 0, 40, None), tp(60, 0, 30, None)]]);
        let r = test_locus(&locus, &TestPlan::classical(StatisticKind::ChiSquare));
        assert_eq!(r.p_value, 1.0);
        assert!(r.flags.contains(Flags::DEGENERATE_MARGIN));

        let single = LocusCounts::new(vec![vec![tp(0, 4, 40, None)]]);
        let r = test_locus(&single, &TestPlan::adapted(StatisticKind::Cmh, 300, false));
        assert!(r.flags.contains(Flags::DEGENERATE_MARGIN));
    }

    #[test]
    fn classical_cmh_skips_empty_strata() {
        let good = vec![tp(0, 20, 10, None), tp(60, 10, 20, None)];
        let empty = vec![tp(0, 0, 10, None), tp(60, 0, 20, None)];
        let with = LocusCounts::new(vec![good.clone(), empty]);
        let without = LocusCounts::new(vec![good]);
        let plan = TestPlan::classical(StatisticKind::Cmh);
        assert_eq!(test_locus(&with, &plan).statistic, test_locus(&without, &plan).statistic);
    }

    #[test]
    fn labels() {
        assert_eq!(TestPlan::classical(StatisticKind::ChiSquare).label(), "Q-classic");
        assert_eq!(TestPlan::adapted(StatisticKind::Cmh, 300, true).label(), "CMH-adapted-ig");
    }
}
