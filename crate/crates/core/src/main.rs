use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use driftscan::adjust::{apply_correction, fit_tail_correction, CorrectionModel, DEFAULT_Z};
use driftscan::bench::{compare_methods, format_reports, read_truth, sampling_only_reference};
use driftscan::error::{Error, Result};
use driftscan::locus::LocusCounts;
use driftscan::pipeline::{scan_files, Correction, OnParseError, ScanConfig};
use driftscan::scan::{test_locus, TestPlan};
use driftscan::sim::{simulate_experiment, Coefficient, Coverage, Founders, Observed, Selection, SimConfig, StartFreq};
use driftscan::sync::{biallelize, parse_sync, Manifest};
use driftscan::variance::StatisticKind;

#[derive(Parser)]
#[command(name = "driftscan", version, about = "Drift-aware selection scans for evolve-and-resequence data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a sync file and write per-locus results
    Test(TestArgs),
    /// Simulate a dataset: sync file, manifest and truth table
    Simulate(SimulateArgs),
    /// Fit the tail correction on null p-values
    Calibrate(CalibrateArgs),
    /// Compare methods on labelled data
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    None,
    Bh,
    BhTail,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParseErrorArg {
    Fail,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Auto,
    ChiSquare,
    Cmh,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservedArg {
    Reads,
    Samples,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Effective population size; omit to leave drift out
    #[arg(long)]
    ne: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    min_af: f64,
    #[arg(long, value_enum, default_value_t = CorrectionArg::Bh)]
    correction: CorrectionArg,
    /// Model file written by `calibrate`; required for bh-tail
    #[arg(long)]
    tail_model: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = ParseErrorArg::Fail)]
    on_parse_error: ParseErrorArg,
    #[arg(long, value_enum, default_value_t = StatisticArg::Auto)]
    statistic: StatisticArg,
    /// Textbook statistic without variance adaptation
    #[arg(long)]
    classic: bool,
    /// Ignore intermediate generations
    #[arg(long)]
    endpoints_only: bool,
    /// Adjusted p-value cutoff for the summary
    #[arg(long, default_value_t = 0.05)]
    fdr: f64,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    loci: u64,
    #[arg(long, default_value_t = 300)]
    ne: u64,
    /// Comma-separated sampling generations starting at 0
    #[arg(long, default_value = "0,60", value_delimiter = ',')]
    generations: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 1000)]
    sample_size: u64,
    /// Mean of the Poisson coverage
    #[arg(long, default_value_t = 80.0)]
    coverage: f64,
    /// Constant coverage instead of Poisson
    #[arg(long)]
    fixed_coverage: Option<u64>,
    /// uniform, beta:A,B or fixed:P
    #[arg(long, default_value = "uniform", value_parser = parse_start)]
    start: StartFreq,
    /// Draw a separate start frequency for every replicate
    #[arg(long)]
    independent_starts: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl SimArgs {
    fn config(&self, selection: Selection) -> SimConfig {
        SimConfig {
            n_loci: self.loci,
            ne: self.ne,
            generations: self.generations.clone(),
            start_freq: self.start,
            sample_size: self.sample_size,
            coverage: match self.fixed_coverage {
                Some(c) => Coverage::Fixed(c),
                None => Coverage::Poisson(self.coverage),
            },
            replicates: self.replicates,
            selection,
            seed: self.seed,
            drift: true,
            founders: if self.independent_starts { Founders::PerReplicate } else { Founders::Shared },
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Output prefix: writes PREFIX.sync, PREFIX.manifest and PREFIX.truth.tsv
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 0.0)]
    selected_fraction: f64,
    /// Fixed selection coefficient
    #[arg(long, conflicts_with = "s_mean")]
    s: Option<f64>,
    /// Mean of exponentially distributed selection coefficients
    #[arg(long)]
    s_mean: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    dominance: f64,
    #[arg(long, value_enum, default_value_t = ObservedArg::Reads)]
    observe: ObservedArg,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Null p-values: one per line, or a results table from `test`
    #[arg(long)]
    pvalues: Option<PathBuf>,
    /// Model file to write
    #[arg(long)]
    output: PathBuf,
    /// Before/after calibration table; printed to stderr when omitted
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z)]
    z: f64,
    /// Inner threshold; defaults to z/10
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_enum, default_value_t = StatisticArg::Auto)]
    statistic: StatisticArg,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 300)]
    ne: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Sampling-only loci simulated for the empirical cutoff
    #[arg(long, default_value_t = 100_000)]
    reference_loci: u64,
    #[arg(long, default_value_t = 80.0)]
    coverage: f64,
    #[arg(long, default_value = "uniform", value_parser = parse_start)]
    start: StartFreq,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_start(s: &str) -> std::result::Result<StartFreq, String> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?}"));
    match s.split_once(':') {
        None if s == "uniform" => Ok(StartFreq::Uniform),
        Some(("fixed", p)) => Ok(StartFreq::Fixed(num(p)?)),
        Some(("beta", ab)) => {
            let (a, b) = ab.split_once(',').ok_or("beta needs A,B")?;
            Ok(StartFreq::Beta(num(a)?, num(b)?))
        }
        _ => Err(format!("{s:?} is not uniform, beta:A,B or fixed:P")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(args) => run_test(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Benchmark(args) => run_benchmark(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn run_test(args: TestArgs) -> Result<()> {
    let manifest = Manifest::from_path(&args.manifest)?;
    let mut cfg = ScanConfig::for_manifest(&manifest, args.ne);
    match args.statistic {
        StatisticArg::Auto => {}
        StatisticArg::ChiSquare => cfg.plan.statistic = StatisticKind::ChiSquare,
        StatisticArg::Cmh => cfg.plan.statistic = StatisticKind::Cmh,
    }
    if args.classic {
        cfg.plan = TestPlan::classical(cfg.plan.statistic);
    }
    if args.endpoints_only {
        cfg.plan.intermediate = false;
    }
    cfg.min_af = args.min_af;
    cfg.fdr = args.fdr;
    cfg.workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cfg.on_parse_error = match args.on_parse_error {
        ParseErrorArg::Fail => OnParseError::Fail,
        ParseErrorArg::Skip => OnParseError::Skip,
    };
    cfg.correction = match (args.correction, &args.tail_model) {
        (CorrectionArg::None, _) => Correction::None,
        (CorrectionArg::Bh, _) => Correction::Bh,
        (CorrectionArg::BhTail, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Correction::BhTail(CorrectionModel::from_text(&text)?)
        }
        (CorrectionArg::BhTail, None) => {
            return Err(Error::InvalidInput("--correction bh-tail needs --tail-model".into()))
        }
    };
    if !(0.0..0.5).contains(&cfg.min_af) {
        return Err(Error::InvalidInput("--min-af must lie in [0, 0.5)".into()));
    }

    let summary = scan_files(&args.input, &manifest, &args.output, &cfg)?;
    eprintln!("method: {}", cfg.plan.label());
    eprintln!("records read: {}", summary.records);
    eprintln!("loci tested: {}", summary.tested);
    eprintln!(
        "loci dropped: {} (min-af {}, not polymorphic {}, malformed lines {})",
        summary.filtered_min_af + summary.not_polymorphic + summary.skipped_lines,
        summary.filtered_min_af,
        summary.not_polymorphic,
        summary.skipped_lines
    );
    eprintln!("degenerate tables: {}", summary.degenerate);
    eprintln!("zero-adjusted loci: {}", summary.zero_adjusted);
    eprintln!("significant at {}: {}", cfg.fdr, summary.significant);
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let coefficient = match (args.s, args.s_mean) {
        (_, Some(mean)) => Coefficient::Exponential { mean },
        (Some(s), None) => Coefficient::Fixed(s),
        (None, None) => Coefficient::Fixed(0.0),
    };
    let cfg = args.sim.config(Selection {
        fraction: args.selected_fraction,
        coefficient,
        dominance: args.dominance,
    });
    let data = simulate_experiment(&cfg)?;
    let observed = match args.observe {
        ObservedArg::Reads => Observed::Reads,
        ObservedArg::Samples => Observed::Samples,
    };
    let paths = [".sync", ".manifest", ".truth.tsv"].map(|s| with_suffix(&args.output, s));
    let mut sync = create(&paths[0])?;
    data.write_sync(&mut sync, observed)
        .and_then(|_| sync.flush())
        .map_err(|e| Error::io(&paths[0], e))?;
    let mut manifest = create(&paths[1])?;
    data.write_manifest(&mut manifest, observed)
        .and_then(|_| manifest.flush())
        .map_err(|e| Error::io(&paths[1], e))?;
    let mut truth = create(&paths[2])?;
    data.write_truth(&mut truth)
        .and_then(|_| truth.flush())
        .map_err(|e| Error::io(&paths[2], e))?;
    eprintln!(
        "simulated {} loci ({} selected), {} zero-coverage redraws",
        data.loci.len(),
        data.loci.iter().filter(|l| l.selected).count(),
        data.coverage_resamples
    );
    Ok(())
}

/// p-values from a plain list or from the `p_value` column of a results table.
fn read_pvalues(path: &Path) -> Result<Vec<f64>> {
    let mut column = None;
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 && line.contains("p_value") {
            column = line.split('\t').position(|c| c == "p_value");
            continue;
        }
        let field = match column {
            Some(c) => line.split('\t').nth(c).unwrap_or(""),
            None => line,
        };
        if field == "NA" {
            continue;
        }
        let p: f64 = field.parse().map_err(|_| Error::Parse {
            line: i + 1,
            reason: format!("bad p-value {field:?}"),
        })?;
        out.push(p);
    }
    Ok(out)
}

fn run_calibrate(args: CalibrateArgs) -> Result<()> {
    let nulls = match &args.pvalues {
        Some(path) => read_pvalues(path)?,
        None => {
            let cfg = args.sim.config(Selection::NEUTRAL);
            let kind = match args.statistic {
                StatisticArg::ChiSquare => StatisticKind::ChiSquare,
                StatisticArg::Cmh => StatisticKind::Cmh,
                StatisticArg::Auto if cfg.replicates > 1 => StatisticKind::Cmh,
                StatisticArg::Auto => StatisticKind::ChiSquare,
            };
            let plan = TestPlan::adapted(kind, cfg.ne, false);
            let data = simulate_experiment(&cfg)?;
            data.loci
                .iter()
                .map(|l| {
                    let mut counts = l.counts(&cfg.generations, cfg.sample_size, Observed::Reads);
                    counts.zero_adjust();
                    test_locus(&counts, &plan).p_value
                })
                .collect()
        }
    };
    let model = fit_tail_correction(&nulls, args.z, args.s).map_err(|e| match e {
        Error::InsufficientTail { got, needed, z } => Error::InvalidInput(format!(
            "only {got} null p-values below z = {z} (need {needed}); supply more null loci or raise --z"
        )),
        other => other,
    })?;
    fs::write(&args.output, model.to_text()).map_err(|e| Error::io(&args.output, e))?;

    let n = nulls.len() as f64;
    let mut table = String::from("cutoff\tbefore\tafter\n");
    for c in [1e-2, 1e-3, 1e-4, 1e-5] {
        let before = nulls.iter().filter(|&&p| p < c).count() as f64 / n;
        let after = nulls.iter().filter(|&&p| apply_correction(&model, p) < c).count() as f64 / n;
        table.push_str(&format!("{c:e}\t{before:.6e}\t{after:.6e}\n"));
    }
    match &args.table {
        Some(path) => fs::write(path, &table).map_err(|e| Error::io(path, e))?,
        None => eprint!("{table}"),
    }
    eprintln!("fitted on {} null p-values: {}", nulls.len(), model.to_text().replace('\n', " "));
    Ok(())
}

fn run_benchmark(args: BenchmarkArgs) -> Result<()> {
    let manifest = Manifest::from_path(&args.manifest)?;
    let truth = read_truth(open(&args.truth)?)?;
    let mut loci: Vec<LocusCounts> = Vec::new();
    let mut selected = Vec::new();
    let mut monomorphic = 0;
    for record in parse_sync(open(&args.input)?) {
        let record = record?;
        let label = *truth.get(&(record.chrom.clone(), record.pos)).ok_or_else(|| {
            Error::InvalidInput(format!("no truth label for {}:{}", record.chrom, record.pos))
        })?;
        match biallelize(&record, &manifest) {
            Ok(mut locus) => {
                locus.counts.zero_adjust();
                loci.push(locus.counts);
                selected.push(label);
            }
            Err(Error::NotPolymorphic) => monomorphic += 1,
            Err(e) => return Err(e),
        }
    }

    let first = &manifest.columns()[0];
    let generations: Vec<u32> = {
        let rep = first.replicate;
        let mut g: Vec<u32> = manifest
            .columns()
            .iter()
            .filter(|c| c.replicate == rep)
            .map(|c| c.generation)
            .collect();
        g.sort_unstable();
        g
    };
    let reference_cfg = SimConfig {
        n_loci: args.reference_loci,
        ne: args.ne,
        generations,
        start_freq: args.start,
        sample_size: first.pool_size.unwrap_or(1000),
        coverage: Coverage::Poisson(args.coverage),
        replicates: 1,
        selection: Selection::NEUTRAL,
        seed: args.seed,
        drift: false,
        founders: Founders::Shared,
    };
    reference_cfg.validate()?;
    let reference = sampling_only_reference(&reference_cfg, args.reference_loci);
    let reports = compare_methods(&loci, &selected, &reference, args.ne, args.alpha)?;
    fs::write(&args.output, format_reports(&reports)).map_err(|e| Error::io(&args.output, e))?;
    eprintln!(
        "benchmarked {} loci ({} selected); {} monomorphic loci skipped",
        loci.len(),
        selected.iter().filter(|&&s| s).count(),
        monomorphic
    );
    Ok(())
}
