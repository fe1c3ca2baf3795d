//! Sync-format input: streaming record parser, run manifest and reduction of
//! a multi-column record to bi-allelic counts.

use std::fs;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::locus::{LocusCounts, TimePoint};
use crate::stats::Flags;

/// Count columns in a sync field: A, T, C, G, N, deletion.
pub const BASES: [char; 4] = ['A', 'T', 'C', 'G'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncRecord {
    pub chrom: String,
    pub pos: u64,
    pub ref_base: char,
    pub columns: Vec<[u64; 6]>,
}

pub fn parse_sync_line(line: &str, line_no: usize) -> Result<SyncRecord> {
    let err = |reason: String| Error::Parse { line: line_no, reason };
    let mut fields = line.split('\t');
    let chrom = fields.next().filter(|c| !c.is_empty()).ok_or_else(|| err("missing chromosome".into()))?;
    let pos = fields.next().ok_or_else(|| err("missing position".into()))?;
    let pos: u64 = pos
        .parse()
        .ok()
        .filter(|&p| p > 0)
        .ok_or_else(|| err(format!("position {pos:?} is not a positive integer")))?;
    let ref_field = fields.next().ok_or_else(|| err("missing reference base".into()))?;
    let ref_base = match ref_field.to_ascii_uppercase().as_str() {
        "A" => 'A',
        "T" => 'T',
        "C" => 'C',
        "G" => 'G',
        "N" => 'N',
        _ => return Err(err(format!("reference base {ref_field:?} is not one of A, T, C, G, N"))),
    };
    let mut columns = Vec::new();
    for (i, field) in fields.enumerate() {
        let mut counts = [0u64; 6];
        let mut parts = field.split(':');
        for slot in counts.iter_mut() {
            let part = parts
                .next()
                .ok_or_else(|| err(format!("population column {} has fewer than 6 counts", i + 1)))?;
            *slot = part
                .parse()
                .map_err(|_| err(format!("population column {}: bad count {part:?}", i + 1)))?;
        }
        if parts.next().is_some() {
            return Err(err(format!("population column {} has more than 6 counts", i + 1)));
        }
        columns.push(counts);
    }
    if columns.is_empty() {
        return Err(err("no population columns".into()));
    }
    Ok(SyncRecord {
        chrom: chrom.to_string(),
        pos,
        ref_base,
        columns,
    })
}

/// Streaming parser. Yields one item per non-empty line; after an error the
/// iterator can keep going, which is how skip-on-error mode works.
pub struct SyncReader<R> {
    reader: R,
    buf: String,
    line_no: usize,
    n_columns: Option<usize>,
}

pub fn parse_sync<R: BufRead>(reader: R) -> SyncReader<R> {
    SyncReader {
        reader,
        buf: String::new(),
        line_no: 0,
        n_columns: None,
    }
}

impl<R: BufRead> SyncReader<R> {
    pub fn line_no(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for SyncReader<R> {
    type Item = Result<SyncRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_sync_line(line, self.line_no).and_then(|rec| {
                let expected = *self.n_columns.get_or_insert(rec.columns.len());
                if rec.columns.len() != expected {
                    return Err(Error::Parse {
                        line: self.line_no,
                        reason: format!("{} population columns, expected {expected}", rec.columns.len()),
                    });
                }
                Ok(rec)
            });
            return Some(record);
        }
    }
}

/// Layout of one sync population column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSpec {
    pub replicate: u32,
    pub generation: u32,
    /// Sampled alleles for two-step (pooled) data.
    pub pool_size: Option<u64>,
}

/// Run manifest: one `replicate,generation,model` line per sync column, where
/// model is `one_step` or `two_step:<alleles sampled>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    columns: Vec<ColumnSpec>,
    /// Column indices per replicate (ascending id), ordered by generation.
    layout: Vec<Vec<usize>>,
}

impl Manifest {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidInput("manifest lists no columns".into()));
        }
        let mut ids: Vec<u32> = columns.iter().map(|c| c.replicate).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut layout = Vec::with_capacity(ids.len());
        for id in ids {
            let mut cols: Vec<usize> = (0..columns.len()).filter(|&i| columns[i].replicate == id).collect();
            cols.sort_by_key(|&i| columns[i].generation);
            if cols.windows(2).any(|w| columns[w[0]].generation == columns[w[1]].generation) {
                return Err(Error::InvalidInput(format!("replicate {id} lists a generation twice")));
            }
            if cols.len() < 2 {
                return Err(Error::InvalidInput(format!("replicate {id} needs at least two generations")));
            }
            layout.push(cols);
        }
        Ok(Manifest { columns, layout })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("replicate") {
                continue;
            }
            let err = |reason: String| Error::Parse { line: i + 1, reason };
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let [rep, generation, model] = parts[..] else {
                return Err(err(format!("expected replicate,generation,model; got {line:?}")));
            };
            let replicate = rep.parse().map_err(|_| err(format!("bad replicate {rep:?}")))?;
            let generation = generation
                .parse()
                .map_err(|_| err(format!("bad generation {generation:?}")))?;
            let pool_size = match model.split_once(':') {
                None if model == "one_step" => None,
                Some(("two_step", n)) => match n.parse::<u64>() {
                    Ok(n) if n > 0 => Some(n),
                    _ => return Err(err(format!("bad pool size {n:?}"))),
                },
                _ => return Err(err(format!("model {model:?} is not one_step or two_step:<n>"))),
            };
            columns.push(ColumnSpec {
                replicate,
                generation,
                pool_size,
            });
        }
        Manifest::new(columns)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text)
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn n_replicates(&self) -> usize {
        self.layout.len()
    }

    /// True when some replicate has generations between its first and last.
    pub fn has_intermediate(&self) -> bool {
        self.layout.iter().any(|cols| cols.len() > 2)
    }

    fn earliest_generation(&self) -> u32 {
        self.columns.iter().map(|c| c.generation).min().unwrap_or(0)
    }
}

/// A bi-allelic locus ready for testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocusInput {
    pub chrom: String,
    pub pos: u64,
    /// Allele 1 (major in the earliest generation) and allele 2.
    pub alleles: [char; 2],
    pub counts: LocusCounts,
    pub flags: Flags,
}

/// Keeps the two nucleotides with the highest total count. N and deletion
/// counts are never eligible.
pub fn biallelize(record: &SyncRecord, manifest: &Manifest) -> Result<LocusInput> {
    if record.columns.len() != manifest.columns.len() {
        return Err(Error::InvalidInput(format!(
            "{}:{} has {} population columns but the manifest lists {}",
            record.chrom,
            record.pos,
            record.columns.len(),
            manifest.columns.len()
        )));
    }
    let mut totals = [0u64; 4];
    for col in &record.columns {
        for (t, c) in totals.iter_mut().zip(col) {
            *t += c;
        }
    }
    let mut ranked = [0usize, 1, 2, 3];
    // stable sort keeps A<T<C<G order among ties
    ranked.sort_by(|&a, &b| totals[b].cmp(&totals[a]));
    let (i, j) = (ranked[0], ranked[1]);
    if totals[j] == 0 {
        return Err(Error::NotPolymorphic);
    }
    let mut flags = Flags::empty();
    if totals[ranked[2]] > 0 {
        flags |= Flags::MULTIALLELIC_COLLAPSED;
    }

    let t0 = manifest.earliest_generation();
    let mut early = [0u64; 2];
    for (col, spec) in record.columns.iter().zip(&manifest.columns) {
        if spec.generation == t0 {
            early[0] += col[i];
            early[1] += col[j];
        }
    }
    let (first, second) = if early[1] > early[0] || (early[1] == early[0] && j < i) {
        (j, i)
    } else {
        (i, j)
    };

    let replicates = manifest
        .layout
        .iter()
        .map(|cols| {
            cols.iter()
                .map(|&c| {
                    let spec = manifest.columns[c];
                    TimePoint {
                        generation: spec.generation,
                        counts: [record.columns[c][first], record.columns[c][second]],
                        pool_size: spec.pool_size,
                    }
                })
                .collect()
        })
        .collect();
    Ok(LocusInput {
        chrom: record.chrom.clone(),
        pos: record.pos,
        alleles: [BASES[first], BASES[second]],
        counts: LocusCounts::new(replicates),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_col_manifest() -> Manifest {
        Manifest::parse("1,0,one_step\n1,60,one_step\n").unwrap()
    }

    #[test]
    fn parses_example_line() {
        let rec = parse_sync_line("2L\t5000\tA\t10:0:20:0:0:0\t8:0:22:0:0:0", 1).unwrap();
        assert_eq!(rec.chrom, "2L");
        assert_eq!(rec.pos, 5000);
        assert_eq!(rec.ref_base, 'A');
        assert_eq!(rec.columns, vec![[10, 0, 20, 0, 0, 0], [8, 0, 22, 0, 0, 0]]);
    }

    #[test]
    fn malformed_lines() {
        for line in [
            "2L\t5000\tA\t10:0:20:0:0",
            "2L\t5000\tA\t10:0:20:0:0:0:1",
            "2L\t0\tA\t10:0:20:0:0:0",
            "2L\t5000\tX\t10:0:20:0:0:0",
            "2L\t5000\tA",
            "2L\t5000\tA\t10:0:-2:0:0:0",
        ] {
            assert!(matches!(parse_sync_line(line, 7), Err(Error::Parse { line: 7, .. })), "{line}");
        }
    }

    #[test]
    fn reader_streams_and_checks_columns() {
        assert_eq!(parse_sync(&b""[..]).count(), 0);
        let text = "c\t1\tA\t1:2:0:0:0:0\t1:2:0:0:0:0\n\nc\t2\tA\t1:2:0:0:0:0\nc\t3\tA\t1:0:0:0:0:0\t1:0:0:0:0:0\r\n";
        let items: Vec<_> = parse_sync(text.as_bytes()).collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(Error::Parse { line: 3, .. })));
        assert_eq!(items[2].as_ref().unwrap().pos, 3);
    }

    #[test]
    fn manifest_layout() {
        let m = Manifest::parse("# layout\n2,60,two_step:1000\n1,0,one_step\n2,0,two_step:1000\n1,60,one_step\n").unwrap();
        assert_eq!(m.n_replicates(), 2);
        assert_eq!(m.layout, vec![vec![1, 3], vec![2, 0]]);
        assert!(!m.has_intermediate());
        assert!(Manifest::parse("1,0,one_step\n").is_err());
        assert!(Manifest::parse("1,0,one_step\n1,0,one_step\n").is_err());
        assert!(Manifest::parse("1,0,three_step\n1,6,one_step\n").is_err());
        assert!(Manifest::parse("1,0\n").is_err());
    }

    #[test]
    fn major_allele_at_earliest_generation() {
        let rec = parse_sync_line("2L\t5000\tA\t10:0:20:0:0:0\t8:0:22:0:0:0", 1).unwrap();
        let locus = biallelize(&rec, &two_col_manifest()).unwrap();
        assert_eq!(locus.alleles, ['C', 'A']);
        assert_eq!(locus.counts.replicates[0][0].counts, [20, 10]);
        assert_eq!(locus.counts.replicates[0][1].counts, [22, 8]);
        assert!(locus.flags.is_empty());
    }

    #[test]
    fn collapses_third_allele() {
        let rec = parse_sync_line("c\t1\tA\t3:2:1:0:4:0\t2:3:0:0:0:9", 1).unwrap();
        let locus = biallelize(&rec, &two_col_manifest()).unwrap();
        assert_eq!(locus.alleles, ['A', 'T']);
        assert!(locus.flags.contains(Flags::MULTIALLELIC_COLLAPSED));
    }

    #[test]
    fn ties_follow_base_order() {
        let rec = parse_sync_line("c\t1\tA\t0:0:5:5:0:0\t0:0:5:5:0:0", 1).unwrap();
        assert_eq!(biallelize(&rec, &two_col_manifest()).unwrap().alleles, ['C', 'G']);
    }

    #[test]
    fn monomorphic_rejected() {
        let rec = parse_sync_line("c\t1\tA\t9:0:0:0:3:1\t7:0:0:0:0:0", 1).unwrap();
        assert!(matches!(biallelize(&rec, &two_col_manifest()), Err(Error::NotPolymorphic)));
    }
}
