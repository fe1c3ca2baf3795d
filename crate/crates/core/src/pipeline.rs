//! File-level scan: sync records in, results table out. Records are read in
//! chunks, tested on a worker pool and written back in input order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::adjust::{apply_correction, benjamini_hochberg, CorrectionModel};
use crate::error::{Error, Result};
use crate::locus::filter_min_af;
use crate::output::{adjusted_columns, row_parts, write_header, ResultRow};
use crate::scan::{test_locus, TestPlan};
use crate::stats::Flags;
use crate::sync::{biallelize, parse_sync, LocusInput, Manifest, SyncRecord};
use crate::variance::StatisticKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correction {
    None,
    Bh,
    /// Tail correction first, then Benjamini-Hochberg.
    BhTail(CorrectionModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnParseError {
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub plan: TestPlan,
    pub min_af: f64,
    pub correction: Correction,
    /// Adjusted p-value cutoff used for the summary count.
    pub fdr: f64,
    pub workers: usize,
    pub on_parse_error: OnParseError,
    pub chunk_size: usize,
}

impl ScanConfig {
    /// Picks CMH for several replicates and chi-square for one; uses all
    /// generations when the manifest has intermediate ones.
    pub fn for_manifest(manifest: &Manifest, ne: Option<u64>) -> Self {
        let statistic = if manifest.n_replicates() > 1 {
            StatisticKind::Cmh
        } else {
            StatisticKind::ChiSquare
        };
        let plan = match ne {
            Some(ne) => TestPlan::adapted(statistic, ne, manifest.has_intermediate()),
            None => TestPlan {
                adapted: true,
                ..TestPlan::classical(statistic)
            },
        };
        ScanConfig {
            plan,
            min_af: 0.0,
            correction: Correction::Bh,
            fdr: 0.05,
            workers: 1,
            on_parse_error: OnParseError::Fail,
            chunk_size: 4096,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanSummary {
    pub records: u64,
    pub tested: u64,
    pub filtered_min_af: u64,
    pub not_polymorphic: u64,
    pub degenerate: u64,
    pub zero_adjusted: u64,
    pub skipped_lines: u64,
    pub significant: u64,
}

/// Zero-adjusts, filters and tests one locus.
pub fn process_locus(mut locus: LocusInput, cfg: &ScanConfig) -> ResultRow {
    if locus.counts.zero_adjust() {
        locus.flags |= Flags::ZERO_ADJUSTED;
    }
    let result = if filter_min_af(&locus.counts, cfg.min_af) {
        Some(test_locus(&locus.counts, &cfg.plan))
    } else {
        locus.flags |= Flags::FILTERED_MIN_AF;
        None
    };
    ResultRow {
        chrom: locus.chrom,
        pos: locus.pos,
        alleles: locus.alleles,
        result,
        p_adjusted: None,
        flags: locus.flags,
    }
}

enum Item {
    Row(ResultRow),
    NotPolymorphic,
}

fn process_record(record: &SyncRecord, manifest: &Manifest, cfg: &ScanConfig) -> Result<Item> {
    match biallelize(record, manifest) {
        Ok(locus) => Ok(Item::Row(process_locus(locus, cfg))),
        Err(Error::NotPolymorphic) => Ok(Item::NotPolymorphic),
        Err(e) => Err(e),
    }
}

/// Scans `input` and writes the results table to `out`. `log` receives one
/// line per skipped record.
pub fn scan<R: BufRead, W: Write>(
    input: R,
    manifest: &Manifest,
    cfg: &ScanConfig,
    out: W,
    log: &mut dyn Write,
) -> Result<ScanSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let mut summary = ScanSummary::default();
    let mut out = BufWriter::new(out);
    write_header(&mut out)?;

    // Uncorrected output streams straight through. Otherwise rows are
    // spilled to a temporary file until every p-value is known.
    let mut spill = match cfg.correction {
        Correction::None => None,
        _ => Some(BufWriter::new(tempfile::tempfile()?)),
    };
    let mut pvalues = Vec::new();

    let mut records = parse_sync(input);
    let mut chunk = Vec::with_capacity(cfg.chunk_size.max(1));
    loop {
        chunk.clear();
        for item in records.by_ref() {
            match item {
                Ok(rec) => chunk.push(rec),
                Err(e @ Error::Parse { .. }) if cfg.on_parse_error == OnParseError::Skip => {
                    writeln!(log, "skipped: {e}")?;
                    summary.skipped_lines += 1;
                }
                Err(e) => return Err(e),
            }
            if chunk.len() == cfg.chunk_size.max(1) {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        summary.records += chunk.len() as u64;
        let items: Vec<Result<Item>> =
            pool.install(|| chunk.par_iter().map(|rec| process_record(rec, manifest, cfg)).collect());
        for item in items {
            let row = match item? {
                Item::Row(row) => row,
                Item::NotPolymorphic => {
                    summary.not_polymorphic += 1;
                    continue;
                }
            };
            tally(&mut summary, &row);
            let (head, tail) = row_parts(&row);
            match (&mut spill, &row.result) {
                (None, Some(r)) => {
                    if r.p_value <= cfg.fdr {
                        summary.significant += 1;
                    }
                    writeln!(out, "{head}\t{}\t{tail}", adjusted_columns(Some(r.p_value)))?;
                }
                (None, None) => writeln!(out, "{head}\t{}\t{tail}", adjusted_columns(None))?,
                (Some(spill), result) => {
                    if let Some(r) = result {
                        pvalues.push(corrected(r.p_value, &cfg.correction));
                    }
                    writeln!(spill, "{head}\t{tail}")?;
                }
            }
        }
    }

    if let Some(spill) = spill {
        let adjusted = if pvalues.is_empty() {
            Vec::new()
        } else {
            benjamini_hochberg(&pvalues)?
        };
        summary.significant = adjusted.iter().filter(|&&q| q <= cfg.fdr).count() as u64;
        let mut file = spill.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(0))?;
        let mut next = adjusted.into_iter();
        for line in BufReader::new(file).lines() {
            let line = line?;
            // the spilled line is the six leading columns followed by the tail
            let split = line.match_indices('\t').nth(5).map(|(i, _)| i).unwrap_or(line.len());
            let (head, tail) = line.split_at(split);
            let q = if head.ends_with("\tNA") { None } else { next.next() };
            writeln!(out, "{head}\t{}{tail}", adjusted_columns(q))?;
        }
    }
    out.flush()?;
    Ok(summary)
}

fn corrected(p: f64, correction: &Correction) -> f64 {
    match correction {
        Correction::BhTail(model) => apply_correction(model, p),
        _ => p,
    }
}

fn tally(summary: &mut ScanSummary, row: &ResultRow) {
    if row.flags.contains(Flags::ZERO_ADJUSTED) {
        summary.zero_adjusted += 1;
    }
    match &row.result {
        None => summary.filtered_min_af += 1,
        Some(r) => {
            summary.tested += 1;
            if r.flags.contains(Flags::DEGENERATE_MARGIN) {
                summary.degenerate += 1;
            }
        }
    }
}

/// [`scan`] over files; errors carry the offending path.
pub fn scan_files(input: &Path, manifest: &Manifest, output: &Path, cfg: &ScanConfig) -> Result<ScanSummary> {
    let reader = BufReader::new(File::open(input).map_err(|e| Error::io(input, e))?);
    let writer = File::create(output).map_err(|e| Error::io(output, e))?;
    scan(reader, manifest, cfg, writer, &mut std::io::stderr()).map_err(|e| match e {
        Error::Stream(source) => Error::io(output, source),
        other => other,
    })
}
