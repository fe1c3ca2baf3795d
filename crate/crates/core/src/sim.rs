//! Wright-Fisher forward simulation of bi-allelic loci with diploid
//! selection, binomial allele sampling and Poisson-coverage pool sequencing.
//!
//! Every locus draws from its own ChaCha stream keyed by `(seed, locus index)`,
//! so a locus is reproducible on its own and parallel evaluation does not
//! change results.

use std::io::Write;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::locus::{LocusCounts, TimePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartFreq {
    Uniform,
    Beta(f64, f64),
    Fixed(f64),
}

impl StartFreq {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            StartFreq::Uniform => rng.random::<f64>(),
            StartFreq::Beta(a, b) => Beta::new(a, b).expect("valid beta").sample(rng),
            StartFreq::Fixed(p) => p,
        }
    }
}

/// Whether the replicate populations of a locus share one start frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Founders {
    Shared,
    /// Each replicate draws its own start frequency.
    PerReplicate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coverage {
    Poisson(f64),
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Fixed(f64),
    Exponential { mean: f64 },
}

/// Which loci are selected and how strongly. Selected loci are spread evenly
/// over the index range so that exactly `round(fraction * n_loci)` are selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub fraction: f64,
    pub coefficient: Coefficient,
    pub dominance: f64,
}

impl Selection {
    pub const NEUTRAL: Selection = Selection {
        fraction: 0.0,
        coefficient: Coefficient::Fixed(0.0),
        dominance: 0.5,
    };

    pub fn all(s: f64) -> Self {
        Selection {
            fraction: 1.0,
            coefficient: Coefficient::Fixed(s),
            dominance: 0.5,
        }
    }

    fn is_selected(&self, index: u64) -> bool {
        if self.fraction <= 0.0 {
            return false;
        }
        if self.fraction >= 1.0 {
            return true;
        }
        let i = index as f64;
        ((i + 1.0) * self.fraction).floor() > (i * self.fraction).floor()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_loci: u64,
    pub ne: u64,
    /// Sampling generations, starting at 0 and strictly increasing.
    pub generations: Vec<u32>,
    pub start_freq: StartFreq,
    /// Alleles sampled per population and time point before pooling.
    pub sample_size: u64,
    pub coverage: Coverage,
    pub replicates: usize,
    pub selection: Selection,
    pub seed: u64,
    /// `false` freezes every trajectory at its start frequency, leaving
    /// only the sampling noise.
    pub drift: bool,
    pub founders: Founders,
}

impl SimConfig {
    /// Neutral two-time-point setup: `N_e = 300`, 1000 sampled alleles,
    /// Poisson(80) coverage, generations 0 and 60, uniform start frequencies.
    pub fn neutral(n_loci: u64, replicates: usize, seed: u64) -> Self {
        SimConfig {
            n_loci,
            ne: 300,
            generations: vec![0, 60],
            start_freq: StartFreq::Uniform,
            sample_size: 1000,
            coverage: Coverage::Poisson(80.0),
            replicates,
            selection: Selection::NEUTRAL,
            seed,
            drift: true,
            founders: Founders::Shared,
        }
    }

    /// Method-comparison setup: 10% of loci selected with exponentially
    /// distributed coefficients of mean 0.1 and dominance 0.5, each
    /// replicate starting from its own frequency.
    pub fn comparison(n_loci: u64, replicates: usize, seed: u64) -> Self {
        SimConfig {
            selection: Selection {
                fraction: 0.1,
                coefficient: Coefficient::Exponential { mean: 0.1 },
                dominance: 0.5,
            },
            founders: Founders::PerReplicate,
            ..SimConfig::neutral(n_loci, replicates, seed)
        }
    }

    pub fn with_generations(mut self, generations: Vec<u32>) -> Self {
        self.generations = generations;
        self
    }

    /// Same layout and sampling with drift and selection switched off.
    pub fn sampling_only(&self) -> Self {
        SimConfig {
            selection: Selection::NEUTRAL,
            drift: false,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.ne == 0 {
            return bad("ne must be positive");
        }
        if self.generations.first() != Some(&0) {
            return bad("generations must start at 0");
        }
        if self.generations.windows(2).any(|w| w[0] >= w[1]) {
            return bad("generations must be strictly increasing");
        }
        if self.sample_size == 0 {
            return bad("sample size must be positive");
        }
        if self.replicates == 0 {
            return bad("need at least one replicate");
        }
        match self.start_freq {
            StartFreq::Beta(a, b) if !(a > 0.0 && b > 0.0) => return bad("beta parameters must be positive"),
            StartFreq::Fixed(p) if !(0.0..=1.0).contains(&p) => return bad("fixed start frequency outside [0, 1]"),
            _ => {}
        }
        match self.coverage {
            Coverage::Poisson(l) if l.is_nan() || l <= 0.0 => return bad("Poisson coverage mean must be positive"),
            Coverage::Fixed(0) => return bad("fixed coverage must be positive"),
            _ => {}
        }
        let sel = &self.selection;
        if !(0.0..=1.0).contains(&sel.fraction) || !(0.0..=1.0).contains(&sel.dominance) {
            return bad("selected fraction and dominance must lie in [0, 1]");
        }
        match sel.coefficient {
            Coefficient::Fixed(s) if s < -1.0 => return bad("selection coefficient must be >= -1"),
            Coefficient::Exponential { mean } if mean.is_nan() || mean <= 0.0 => return bad("exponential mean must be positive"),
            _ => {}
        }
        Ok(())
    }
}

/// One population at one sampling time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimObservation {
    pub true_freq: f64,
    pub sample_count: u32,
    pub read_count: u32,
    pub coverage: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLocus {
    pub index: u64,
    /// Start frequency of the first replicate.
    pub p0: f64,
    pub s: f64,
    pub h: f64,
    pub selected: bool,
    /// `replicates[k][i]` is replicate `k` at the `i`-th sampling generation.
    pub replicates: Vec<Vec<SimObservation>>,
    pub coverage_resamples: u32,
}

/// How simulated data is presented to the tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observed {
    /// The allele sample itself, as from individual sequencing.
    Samples,
    /// Pool-sequencing reads, with the sample size attached.
    Reads,
}

impl SimLocus {
    /// Allele-1 / allele-2 counts per replicate and generation.
    pub fn counts(&self, generations: &[u32], sample_size: u64, observed: Observed) -> LocusCounts {
        let replicates = self
            .replicates
            .iter()
            .map(|obs| {
                obs.iter()
                    .zip(generations)
                    .map(|(o, &generation)| match observed {
                        Observed::Samples => TimePoint {
                            generation,
                            counts: [o.sample_count as u64, sample_size - o.sample_count as u64],
                            pool_size: None,
                        },
                        Observed::Reads => TimePoint {
                            generation,
                            counts: [o.read_count as u64, (o.coverage - o.read_count) as u64],
                            pool_size: Some(sample_size),
                        },
                    })
                    .collect()
            })
            .collect();
        LocusCounts::new(replicates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub config: SimConfig,
    pub loci: Vec<SimLocus>,
    /// Zero-coverage Poisson draws that were redrawn.
    pub coverage_resamples: u64,
}

/// Expected allele frequency after viability selection with genotype
/// fitnesses `1 + s`, `1 + h s`, `1` for the allele-1 homozygote,
/// heterozygote and allele-2 homozygote.
#[inline]
pub fn step_selection(p: f64, s: f64, h: f64) -> f64 {
    if s == 0.0 || p <= 0.0 || p >= 1.0 {
        return p;
    }
    let q = 1.0 - p;
    let w11 = p * p * (1.0 + s);
    let w12 = p * q * (1.0 + h * s);
    let mean = w11 + 2.0 * w12 + q * q;
    ((w11 + w12) / mean).clamp(0.0, 1.0)
}

#[inline]
fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// True allele-1 frequencies at each requested generation. Each generation
/// applies selection and then binomial resampling of `2 ne` gametes.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    p0: f64,
    ne: u64,
    generations: &[u32],
    s: f64,
    h: f64,
    rng: &mut R,
) -> Vec<f64> {
    let gametes = 2 * ne;
    let mut out = Vec::with_capacity(generations.len());
    let mut p = p0;
    let mut current = 0u32;
    for &target in generations {
        while current < target {
            if p > 0.0 && p < 1.0 {
                let expected = step_selection(p, s, h);
                p = binomial(gametes, expected, rng) as f64 / gametes as f64;
            }
            current += 1;
        }
        out.push(p);
    }
    out
}

/// Samples `sample_size` alleles, then sequences the pool at a drawn coverage.
/// Returns the observation and whether a zero coverage had to be redrawn.
pub fn sample_and_pool<R: Rng + ?Sized>(
    p_true: f64,
    sample_size: u64,
    coverage: Coverage,
    rng: &mut R,
) -> (SimObservation, bool) {
    let sample_count = binomial(sample_size, p_true, rng);
    let mut resampled = false;
    let depth = match coverage {
        Coverage::Fixed(c) => c,
        Coverage::Poisson(lambda) => {
            let poisson = Poisson::new(lambda).expect("positive Poisson mean");
            loop {
                let d = poisson.sample(rng) as u64;
                if d > 0 {
                    break d;
                }
                resampled = true;
            }
        }
    };
    let read_count = binomial(depth, sample_count as f64 / sample_size as f64, rng);
    (
        SimObservation {
            true_freq: p_true,
            sample_count: sample_count as u32,
            read_count: read_count as u32,
            coverage: depth as u32,
        },
        resampled,
    )
}

fn locus_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates one locus; a pure function of the config and the index.
pub fn simulate_locus(cfg: &SimConfig, index: u64) -> SimLocus {
    let mut rng = locus_rng(cfg.seed, index);
    let p0 = cfg.start_freq.draw(&mut rng);
    let selected = cfg.selection.is_selected(index);
    let s = if selected {
        match cfg.selection.coefficient {
            Coefficient::Fixed(s) => s,
            Coefficient::Exponential { mean } => Exp::new(1.0 / mean).expect("valid rate").sample(&mut rng),
        }
    } else {
        0.0
    };
    let h = cfg.selection.dominance;
    let mut coverage_resamples = 0;
    let replicates = (0..cfg.replicates)
        .map(|k| {
            let start = match cfg.founders {
                Founders::PerReplicate if k > 0 => cfg.start_freq.draw(&mut rng),
                _ => p0,
            };
            let traj = if cfg.drift {
                simulate_trajectory(start, cfg.ne, &cfg.generations, s, h, &mut rng)
            } else {
                vec![start; cfg.generations.len()]
            };
            traj.into_iter()
                .map(|p| {
                    let (obs, resampled) = sample_and_pool(p, cfg.sample_size, cfg.coverage, &mut rng);
                    coverage_resamples += resampled as u32;
                    obs
                })
                .collect()
        })
        .collect();
    SimLocus {
        index,
        p0,
        s,
        h,
        selected,
        replicates,
        coverage_resamples,
    }
}

/// Simulates a contiguous range of loci, in index order.
pub fn simulate_range(cfg: &SimConfig, range: Range<u64>) -> Vec<SimLocus> {
    range.into_par_iter().map(|i| simulate_locus(cfg, i)).collect()
}

pub fn simulate_experiment(cfg: &SimConfig) -> Result<SimDataset> {
    cfg.validate()?;
    let loci = simulate_range(cfg, 0..cfg.n_loci);
    let coverage_resamples = loci.iter().map(|l| l.coverage_resamples as u64).sum();
    Ok(SimDataset {
        config: cfg.clone(),
        loci,
        coverage_resamples,
    })
}

/// Empirical `target` quantile of simulated null p-values: the cutoff that
/// rejects that fraction of the null.
pub fn empirical_fdr_cutoff(null_pvalues: &[f64], target: f64) -> Result<f64> {
    if null_pvalues.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidInput(format!("target fraction {target} must lie in (0, 1)")));
    }
    let mut sorted = null_pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((target * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

impl SimDataset {
    /// Writes the dataset as a sync file: one line per locus on chromosome
    /// `sim`, allele 1 in the A column and allele 2 in the T column, one
    /// population column per (replicate, generation) in manifest order.
    pub fn write_sync<W: Write>(&self, out: &mut W, observed: Observed) -> std::io::Result<()> {
        for locus in &self.loci {
            write!(out, "sim\t{}\tA", locus.index + 1)?;
            for rep in &locus.replicates {
                for o in rep {
                    let (a, t) = match observed {
                        Observed::Samples => (o.sample_count, self.config.sample_size as u32 - o.sample_count),
                        Observed::Reads => (o.read_count, o.coverage - o.read_count),
                    };
                    write!(out, "\t{a}:{t}:0:0:0:0")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Column layout matching [`SimDataset::write_sync`].
    pub fn write_manifest<W: Write>(&self, out: &mut W, observed: Observed) -> std::io::Result<()> {
        let model = match observed {
            Observed::Samples => "one_step".to_string(),
            Observed::Reads => format!("two_step:{}", self.config.sample_size),
        };
        for rep in 1..=self.config.replicates {
            for g in &self.config.generations {
                writeln!(out, "{rep},{g},{model}")?;
            }
        }
        Ok(())
    }

    /// Truth table: locus position, coefficient, label and true frequencies
    /// (generations comma-separated, replicates semicolon-separated).
    pub fn write_truth<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "chrom\tpos\ts\th\tlabel\tp0\ttrue_freqs")?;
        for locus in &self.loci {
            let freqs: Vec<String> = locus
                .replicates
                .iter()
                .map(|rep| rep.iter().map(|o| o.true_freq.to_string()).collect::<Vec<_>>().join(","))
                .collect();
            writeln!(
                out,
                "sim\t{}\t{}\t{}\t{}\t{}\t{}",
                locus.index + 1,
                locus.s,
                locus.h,
                if locus.selected { "selected" } else { "neutral" },
                locus.p0,
                freqs.join(";")
            )?;
        }
        Ok(())
    }
}
