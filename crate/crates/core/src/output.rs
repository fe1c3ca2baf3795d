//! Results table: one tab-separated row per locus.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::stats::{Flags, TestResult, VariancePair};

pub const HEADER: &str =
    "chrom\tpos\tallele1\tallele2\tstatistic\tp_value\tp_adjusted\tneg_log10_p_adjusted\ts1_sq\ts2_sq\tflags";

/// One output row. `result` is `None` for loci dropped before testing.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub chrom: String,
    pub pos: u64,
    pub alleles: [char; 2],
    pub result: Option<TestResult>,
    pub p_adjusted: Option<f64>,
    pub flags: Flags,
}

/// 17 significant digits, enough to read back the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn neg_log10(p: f64) -> f64 {
    let v = -p.log10();
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn join_variances(variances: &[VariancePair], pick: fn(&VariancePair) -> f64) -> String {
    if variances.is_empty() {
        return ".".to_string();
    }
    variances.iter().map(|v| fmt_float(pick(v))).collect::<Vec<_>>().join(";")
}

/// The row up to `p_value`, and the `s1_sq`, `s2_sq`, `flags` tail. The
/// adjusted columns go in between once all p-values are known.
pub fn row_parts(row: &ResultRow) -> (String, String) {
    let (stat, p, s1, s2) = match &row.result {
        Some(r) => (
            fmt_float(r.statistic),
            fmt_float(r.p_value),
            join_variances(&r.variances, |v| v.s1_sq),
            join_variances(&r.variances, |v| v.s2_sq),
        ),
        None => ("NA".into(), "NA".into(), ".".into(), ".".into()),
    };
    let flags = row.flags | row.result.as_ref().map_or(Flags::empty(), |r| r.flags);
    (
        format!(
            "{}\t{}\t{}\t{}\t{stat}\t{p}",
            row.chrom, row.pos, row.alleles[0], row.alleles[1]
        ),
        format!("{s1}\t{s2}\t{}", flags.label()),
    )
}

pub fn adjusted_columns(p_adjusted: Option<f64>) -> String {
    match p_adjusted {
        Some(q) => format!("{}\t{}", fmt_float(q), fmt_float(neg_log10(q))),
        None => "NA\tNA".to_string(),
    }
}

pub fn write_header<W: Write>(out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")
}

pub fn write_row<W: Write>(out: &mut W, row: &ResultRow) -> std::io::Result<()> {
    let (head, tail) = row_parts(row);
    writeln!(out, "{head}\t{}\t{tail}", adjusted_columns(row.p_adjusted))
}

pub fn write_results<'a, W: Write>(
    out: &mut W,
    rows: impl IntoIterator<Item = &'a ResultRow>,
) -> std::io::Result<()> {
    write_header(out)?;
    for row in rows {
        write_row(out, row)?;
    }
    Ok(())
}

/// Reads a results table back. Variances and flags are restored; a row
/// whose statistic is `NA` has `result = None`.
pub fn read_results<R: BufRead>(input: R) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let err = |reason: String| Error::Parse { line: line_no, reason };
        if i == 0 {
            if line != HEADER {
                return Err(err("unexpected header".into()));
            }
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 11 {
            return Err(err(format!("{} columns, expected 11", f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s == "NA" {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| err(format!("bad number {s:?}")))
        };
        let list = |s: &str| -> Result<Vec<f64>> {
            if s == "." {
                return Ok(Vec::new());
            }
            s.split(';')
                .map(|v| v.parse().map_err(|_| err(format!("bad variance {v:?}"))))
                .collect()
        };
        let allele = |s: &str| s.chars().next().ok_or_else(|| err("empty allele".into()));
        let flags = Flags::parse_label(f[10]).ok_or_else(|| err(format!("bad flags {:?}", f[10])))?;
        let result = match (num(f[4])?, num(f[5])?) {
            (Some(statistic), Some(p_value)) => {
                let variances = list(f[8])?
                    .into_iter()
                    .zip(list(f[9])?)
                    .map(|(s1_sq, s2_sq)| VariancePair { s1_sq, s2_sq })
                    .collect();
                Some(TestResult {
                    statistic,
                    p_value,
                    variances,
                    flags,
                })
            }
            _ => None,
        };
        rows.push(ResultRow {
            chrom: f[0].to_string(),
            pos: f[1].parse().map_err(|_| err(format!("bad position {:?}", f[1])))?,
            alleles: [allele(f[2])?, allele(f[3])?],
            result,
            p_adjusted: num(f[6])?,
            flags,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: f64) -> ResultRow {
        ResultRow {
            chrom: "2L".into(),
            pos: 5000,
            alleles: ['C', 'A'],
            result: Some(TestResult {
                statistic: 3.069_123_456_789_012,
                p_value: p,
                variances: vec![
                    VariancePair { s1_sq: 7.5, s2_sq: 25.9 },
                    VariancePair { s1_sq: 0.1, s2_sq: 1.0 / 3.0 },
                ],
                flags: Flags::P2_CLAMPED,
            }),
            p_adjusted: Some(1.0),
            flags: Flags::ZERO_ADJUSTED,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_results(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn neg_log10_of_one_is_zero() {
        assert_eq!(fmt_float(neg_log10(1.0)), fmt_float(0.0));
        let mut buf = Vec::new();
        write_row(&mut buf, &row(0.5)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cols: Vec<&str> = text.trim_end().split('\t').collect();
        assert_eq!(cols[7].parse::<f64>().unwrap(), 0.0);
        assert!(!cols[7].starts_with('-'));
        assert_eq!(cols[10], "ZERO_ADJUSTED,P2_CLAMPED");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ps = [0.079_876_543_210_987_65, 1e-300, 5e-324, 0.1 + 0.2, 1.0];
        let rows: Vec<ResultRow> = ps.iter().map(|&p| row(p)).collect();
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        let back = read_results(&buf[..]).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            let (ra, rb) = (a.result.as_ref().unwrap(), b.result.as_ref().unwrap());
            assert_eq!(ra.p_value.to_bits(), rb.p_value.to_bits());
            assert_eq!(ra.statistic.to_bits(), rb.statistic.to_bits());
            assert_eq!(ra.variances, rb.variances);
        }
    }

    #[test]
    fn dropped_rows_use_na() {
        let dropped = ResultRow {
            result: None,
            p_adjusted: None,
            flags: Flags::FILTERED_MIN_AF,
            ..row(0.5)
        };
        let mut buf = Vec::new();
        write_results(&mut buf, [&dropped]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("\tNA\tNA\tNA\tNA\t.\t.\tFILTERED_MIN_AF"));
        assert_eq!(read_results(&buf[..]).unwrap()[0], dropped);
    }
}
