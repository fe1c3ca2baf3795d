//! Variance estimates for one table under each sampling scenario.
//!
//! Run with `cargo run --example scenario_variances`.

use driftscan::stats::CountTable;
use driftscan::variance::{
    drift_factor, estimate_variances, Observation, SamplingModel, ScenarioSpec, StatisticKind, TwoStepCounts,
};

fn main() -> driftscan::Result<()> {
    let table = CountTable::from_rows([60, 40], [45, 55]);
    let (ne, t) = (300, 60);
    println!("table {:?}, Ne {ne}, t {t}, drift factor {:.4}", table, drift_factor(ne, t));
    println!("{:<16}{:>12}{:>12}", "scenario", "s1^2", "s2^2");

    let one = Observation::OneStep(table);
    let two = Observation::TwoStep(TwoStepCounts::new(table, [500, 500])?);
    let cases = [
        ("one-step", SamplingModel::OneStep, &one),
        ("one-step+drift", SamplingModel::OneStepDrift, &one),
        ("two-step", SamplingModel::TwoStep, &two),
        ("two-step+drift", SamplingModel::TwoStepDrift, &two),
    ];
    for (name, pop2, obs) in cases {
        let pop1 = if pop2.is_two_step() { SamplingModel::TwoStep } else { SamplingModel::OneStep };
        let spec = ScenarioSpec::new(pop1, pop2, ne, t, None)?;
        let est = estimate_variances(obs, &spec, None, StatisticKind::ChiSquare)?;
        println!("{name:<16}{:>12.3}{:>12.3}", est.pair.s1_sq, est.pair.s2_sq);
    }
    Ok(())
}
