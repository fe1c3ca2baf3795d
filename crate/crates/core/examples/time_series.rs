//! Drift terms estimated from all sequenced generations instead of the
//! endpoints only.
//!
//! Run with `cargo run --example time_series`.

use driftscan::stats::{chi_square_adapted, CountTable};
use driftscan::special::chi2_sf;
use driftscan::variance::{
    drift_var_hat, drift_var_timeseries, estimate_variances, p2_hat, p2_hat_timeseries, LocusTrajectory, Observation,
    SamplingModel, ScenarioSpec, StatisticKind,
};

fn main() -> driftscan::Result<()> {
    let ne = 300;
    let traj = LocusTrajectory::from_counts(&[
        (0, 412, 1000),
        (10, 455, 1000),
        (20, 470, 1000),
        (30, 521, 1000),
        (40, 566, 1000),
        (50, 590, 1000),
        (60, 634, 1000),
    ])?;
    let first = traj.points()[0];
    let last = traj.points()[traj.len() - 1];
    let table = CountTable::from_rows([first.count, first.depth - first.count], [last.count, last.depth - last.count]);
    let obs = Observation::OneStep(table);

    println!("endpoints:   p2 {:.4}  drift var {:.5}", p2_hat(&table)?, drift_var_hat(&table, ne, 60)?);
    println!("time series: p2 {:.4}  drift var {:.5}", p2_hat_timeseries(&traj), drift_var_timeseries(&traj, ne));

    let ends = ScenarioSpec::new(SamplingModel::OneStep, SamplingModel::OneStepDrift, ne, 60, None)?;
    let all = ScenarioSpec::new(
        SamplingModel::OneStep,
        SamplingModel::OneStepDrift,
        ne,
        60,
        Some(traj.generations().collect()),
    )?;
    for (name, spec, tr) in [("endpoints", &ends, None), ("all points", &all, Some(&traj))] {
        let v = estimate_variances(&obs, spec, tr, StatisticKind::ChiSquare)?.pair;
        let q = chi_square_adapted(&table, v.s1_sq, v.s2_sq)?;
        println!("{name:<11} Q^a {q:7.3}  p = {:.3e}", chi2_sf(q));
    }
    Ok(())
}
