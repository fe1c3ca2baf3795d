//! Wright-Fisher trajectories with and without selection, and a simulated
//! pool-seq experiment written as sync, manifest and truth files.
//!
//! Run with `cargo run --example drift_simulation -- [output prefix]`.

use std::fs::File;
use std::io::BufWriter;

use driftscan::sim::{simulate_experiment, simulate_trajectory, Observed, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generations: Vec<u32> = (0..=6).map(|i| i * 10).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in [0.0, 0.05, 0.2] {
        let mean: Vec<f64> = (0..200)
            .map(|_| simulate_trajectory(0.2, 300, &generations, s, 0.5, &mut rng))
            .fold(vec![0.0; generations.len()], |acc, tr| acc.iter().zip(&tr).map(|(a, p)| a + p / 200.0).collect());
        let shown: Vec<String> = mean.iter().map(|p| format!("{p:.3}")).collect();
        println!("s = {s:<5} mean frequency by generation: {}", shown.join(" "));
    }

    let cfg = SimConfig::comparison(1000, 3, 42).with_generations(vec![0, 30, 60]);
    let ds = simulate_experiment(&cfg)?;
    let selected = ds.loci.iter().filter(|l| l.selected).count();
    println!("{} loci, {selected} selected, {} zero-coverage redraws", ds.loci.len(), ds.coverage_resamples);

    if let Some(prefix) = std::env::args().nth(1) {
        ds.write_sync(&mut BufWriter::new(File::create(format!("{prefix}.sync"))?), Observed::Reads)?;
        ds.write_manifest(&mut BufWriter::new(File::create(format!("{prefix}.manifest"))?), Observed::Reads)?;
        ds.write_truth(&mut BufWriter::new(File::create(format!("{prefix}.truth.tsv"))?))?;
        println!("wrote {prefix}.sync, {prefix}.manifest, {prefix}.truth.tsv");
    }
    Ok(())
}
