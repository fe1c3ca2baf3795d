//! Classical and adapted chi-square / CMH tests on the same read counts.
//!
//! Run with `cargo run --example classic_vs_adapted`.

use driftscan::stats::{
    chi_square_adapted, chi_square_classic, classical_chi_square_variances, cmh_adapted, cmh_classic, CountTable,
};
use driftscan::special::chi2_sf;
use driftscan::variance::{estimate_variances, Observation, SamplingModel, ScenarioSpec, StatisticKind, TwoStepCounts};

fn main() -> driftscan::Result<()> {
    // Pool-seq reads of 1000 sampled alleles at generations 0 and 60.
    let replicates = [
        CountTable::from_rows([52, 28], [31, 49]),
        CountTable::from_rows([47, 35], [30, 56]),
        CountTable::from_rows([40, 41], [22, 60]),
    ];
    let spec = ScenarioSpec::new(SamplingModel::TwoStep, SamplingModel::TwoStepDrift, 300, 60, None)?;

    let table = &replicates[0];
    let classic = chi_square_classic(table)?;
    let v = classical_chi_square_variances(table);
    println!("replicate 1");
    println!("  classical Q         {classic:8.3}  p = {:.3e}", chi2_sf(classic));
    println!(
        "  Q, classical vars   {:8.3}  (same test written as Q^a)",
        chi_square_adapted(table, v.s1_sq, v.s2_sq)?
    );
    let obs = Observation::TwoStep(TwoStepCounts::new(*table, [1000, 1000])?);
    let est = estimate_variances(&obs, &spec, None, StatisticKind::ChiSquare)?;
    let adapted = chi_square_adapted(table, est.pair.s1_sq, est.pair.s2_sq)?;
    println!(
        "  adapted Q           {adapted:8.3}  p = {:.3e}  (s1^2 {:.2}, s2^2 {:.2})",
        chi2_sf(adapted),
        est.pair.s1_sq,
        est.pair.s2_sq
    );

    let mut pairs = Vec::new();
    for t in &replicates {
        let obs = Observation::TwoStep(TwoStepCounts::new(*t, [1000, 1000])?);
        pairs.push(estimate_variances(&obs, &spec, None, StatisticKind::Cmh)?.pair);
    }
    let cmh = cmh_classic(&replicates)?;
    let cmh_a = cmh_adapted(&replicates, &pairs)?;
    println!("all {} replicates", replicates.len());
    println!("  classical CMH       {cmh:8.3}  p = {:.3e}", chi2_sf(cmh));
    println!("  adapted CMH         {cmh_a:8.3}  p = {:.3e}", chi2_sf(cmh_a));
    Ok(())
}
