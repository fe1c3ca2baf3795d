//! Type-I error and power of every method on one simulated experiment.
//!
//! Run with `cargo run --release --example power_benchmark`.

use driftscan::bench::{compare_methods, format_reports, sampling_only_reference, DEFAULT_ALPHA};
use driftscan::sim::{simulate_range, Observed, SimConfig};

fn main() -> driftscan::Result<()> {
    let cfg = SimConfig::comparison(5_000, 5, 7).with_generations((0..=6).map(|i| i * 10).collect());
    let sims = simulate_range(&cfg, 0..cfg.n_loci);
    let selected: Vec<bool> = sims.iter().map(|l| l.selected).collect();
    let loci: Vec<_> = sims
        .iter()
        .map(|l| {
            let mut c = l.counts(&cfg.generations, cfg.sample_size, Observed::Reads);
            c.zero_adjust();
            c
        })
        .collect();
    let reference = sampling_only_reference(&SimConfig { replicates: 1, ..cfg.clone() }, 20_000);
    let reports = compare_methods(&loci, &selected, &reference, cfg.ne, DEFAULT_ALPHA)?;
    print!("{}", format_reports(&reports));
    Ok(())
}
