//! Fits the small-p-value correction on simulated neutral loci and checks
//! it on a fresh set.
//!
//! Run with `cargo run --release --example tail_correction`.

use driftscan::adjust::{fit_tail_correction, CorrectionModel, DEFAULT_Z};
use driftscan::bench::pvalues;
use driftscan::scan::TestPlan;
use driftscan::sim::{simulate_range, Observed, SimConfig};
use driftscan::variance::StatisticKind;

fn null_pvalues(n: u64, seed: u64) -> Vec<f64> {
    let cfg = SimConfig::neutral(n, 1, seed);
    let loci: Vec<_> = simulate_range(&cfg, 0..n)
        .iter()
        .map(|l| {
            let mut c = l.counts(&cfg.generations, cfg.sample_size, Observed::Reads);
            c.zero_adjust();
            c
        })
        .collect();
    pvalues(&loci, &TestPlan::adapted(StatisticKind::ChiSquare, cfg.ne, false))
}

fn below(ps: &[f64], c: f64) -> f64 {
    ps.iter().filter(|&&p| p < c).count() as f64 / ps.len() as f64
}

fn main() -> driftscan::Result<()> {
    let n = 200_000;
    let model = fit_tail_correction(&null_pvalues(n, 1), DEFAULT_Z, None)?;
    print!("{}", model.to_text());
    assert_eq!(CorrectionModel::from_text(&model.to_text())?, model);

    let fresh = null_pvalues(n, 2);
    let corrected: Vec<f64> = fresh.iter().map(|&p| model.apply(p)).collect();
    println!("{:>8}{:>12}{:>12}", "cutoff", "raw", "corrected");
    for c in [1e-2, 1e-3, 1e-4] {
        println!("{c:>8.0e}{:>12.2e}{:>12.2e}", below(&fresh, c), below(&corrected, c));
    }
    Ok(())
}
