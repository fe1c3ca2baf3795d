//! Classical and variance-adapted chi-square and CMH statistics.
//!
//! The adapted forms replace the binomial variances of the two allele-1
//! counts `x11` and `x21` by arbitrary estimates `s1_sq`, `s2_sq`. With the
//! classical plug-in estimators they reproduce the textbook statistics
//! exactly.

use bitflags::bitflags;

use crate::error::{Error, Result};
use crate::special::chi2_sf;

/// One 2x2 table of allele counts: rows are populations (or time points),
/// columns are alleles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountTable {
    pub x11: u64,
    pub x12: u64,
    pub x21: u64,
    pub x22: u64,
}

impl CountTable {
    pub const fn new(x11: u64, x12: u64, x21: u64, x22: u64) -> Self {
        CountTable { x11, x12, x21, x22 }
    }

    pub fn from_rows(row1: [u64; 2], row2: [u64; 2]) -> Self {
        CountTable::new(row1[0], row1[1], row2[0], row2[1])
    }

    #[inline]
    pub fn x1p(&self) -> u64 {
        self.x11 + self.x12
    }
    #[inline]
    pub fn x2p(&self) -> u64 {
        self.x21 + self.x22
    }
    #[inline]
    pub fn xp1(&self) -> u64 {
        self.x11 + self.x21
    }
    #[inline]
    pub fn xp2(&self) -> u64 {
        self.x12 + self.x22
    }
    #[inline]
    pub fn n(&self) -> u64 {
        self.x1p() + self.x2p()
    }

    /// Allele-1 frequency in population 1, `x11 / x1p`.
    pub fn freq1(&self) -> Option<f64> {
        (self.x1p() > 0).then(|| self.x11 as f64 / self.x1p() as f64)
    }

    /// Allele-1 frequency in population 2, `x21 / x2p`.
    pub fn freq2(&self) -> Option<f64> {
        (self.x2p() > 0).then(|| self.x21 as f64 / self.x2p() as f64)
    }

    pub fn has_degenerate_margin(&self) -> bool {
        self.x1p() == 0 || self.x2p() == 0 || self.xp1() == 0 || self.xp2() == 0
    }

    /// Cross-product difference `x11*x22 - x12*x21` divided by `n`, which
    /// equals `x11 - x1p*xp1/n` without the cancellation of the centered form.
    #[inline]
    fn centered_x11(&self) -> f64 {
        let cross = self.x11 as f64 * self.x22 as f64 - self.x12 as f64 * self.x21 as f64;
        cross / self.n() as f64
    }

    /// Weighted variance of the centered count:
    /// `(x2p/n)^2 s1_sq + (x1p/n)^2 s2_sq`.
    #[inline]
    fn centered_variance(&self, s1_sq: f64, s2_sq: f64) -> f64 {
        let n = self.n() as f64;
        let w1 = self.x2p() as f64 / n;
        let w2 = self.x1p() as f64 / n;
        w1 * w1 * s1_sq + w2 * w2 * s2_sq
    }
}

bitflags! {
    /// Per-locus diagnostic flags carried through a scan.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct Flags: u8 {
        const ZERO_ADJUSTED = 1;
        const DEGENERATE_MARGIN = 1 << 1;
        const MULTIALLELIC_COLLAPSED = 1 << 2;
        const FILTERED_MIN_AF = 1 << 3;
        const P2_CLAMPED = 1 << 4;
    }
}

impl Flags {
    const NAMES: [(Flags, &'static str); 5] = [
        (Flags::ZERO_ADJUSTED, "ZERO_ADJUSTED"),
        (Flags::DEGENERATE_MARGIN, "DEGENERATE_MARGIN"),
        (Flags::MULTIALLELIC_COLLAPSED, "MULTIALLELIC_COLLAPSED"),
        (Flags::FILTERED_MIN_AF, "FILTERED_MIN_AF"),
        (Flags::P2_CLAMPED, "P2_CLAMPED"),
    ];

    /// Comma-separated flag names, `.` when empty.
    pub fn label(&self) -> String {
        let names: Vec<&str> = Self::NAMES
            .iter()
            .filter(|(f, _)| self.contains(*f))
            .map(|(_, name)| *name)
            .collect();
        if names.is_empty() {
            ".".to_string()
        } else {
            names.join(",")
        }
    }

    pub fn parse_label(label: &str) -> Option<Flags> {
        if label == "." {
            return Some(Flags::empty());
        }
        label.split(',').try_fold(Flags::empty(), |acc, name| {
            Self::NAMES
                .iter()
                .find(|(_, n)| *n == name)
                .map(|(f, _)| acc | *f)
        })
    }
}

/// Variance estimates `(s1_sq, s2_sq)` for the allele-1 counts of one table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VariancePair {
    pub s1_sq: f64,
    pub s2_sq: f64,
}

impl VariancePair {
    pub const fn new(s1_sq: f64, s2_sq: f64) -> Self {
        VariancePair { s1_sq, s2_sq }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// One pair per replicate (a single pair for the chi-square test).
    pub variances: Vec<VariancePair>,
    pub flags: Flags,
}

impl TestResult {
    pub fn from_statistic(statistic: f64, variances: Vec<VariancePair>, flags: Flags) -> Self {
        TestResult {
            statistic,
            p_value: chi2_sf(statistic),
            variances,
            flags,
        }
    }

    /// Result used when no statistic can be formed; keeps a scan total.
    pub fn degenerate(flags: Flags) -> Self {
        TestResult {
            statistic: 0.0,
            p_value: 1.0,
            variances: Vec::new(),
            flags: flags | Flags::DEGENERATE_MARGIN,
        }
    }
}

/// Pearson's chi-square statistic for a 2x2 table,
/// `n (x11 x22 - x12 x21)^2 / (x1p x2p xp1 xp2)`.
pub fn chi_square_classic(table: &CountTable) -> Result<f64> {
    if table.has_degenerate_margin() {
        return Err(Error::DegenerateMargin { replicate: None });
    }
    let cross = table.x11 as f64 * table.x22 as f64 - table.x12 as f64 * table.x21 as f64;
    let margins =
        table.x1p() as f64 * table.x2p() as f64 * table.xp1() as f64 * table.xp2() as f64;
    Ok(table.n() as f64 * cross * cross / margins)
}

/// Chi-square statistic with general variance estimates for `x11` and `x21`.
pub fn chi_square_adapted(table: &CountTable, s1_sq: f64, s2_sq: f64) -> Result<f64> {
    if table.n() == 0 {
        return Err(Error::DegenerateMargin { replicate: None });
    }
    let denom = table.centered_variance(s1_sq, s2_sq);
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let centered = table.centered_x11();
    Ok(centered * centered / denom)
}

/// Mantel-Haenszel form of the CMH statistic (denominator with `1/(n_k - 1)`).
pub fn cmh_classic(tables: &[CountTable]) -> Result<f64> {
    if tables.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut numer = 0.0;
    let mut denom = 0.0;
    for (k, t) in tables.iter().enumerate() {
        if t.has_degenerate_margin() || t.n() < 2 {
            return Err(Error::DegenerateMargin {
                replicate: Some(k + 1),
            });
        }
        let n = t.n() as f64;
        numer += t.centered_x11();
        denom += t.x1p() as f64 * t.xp1() as f64 * t.x2p() as f64 * t.xp2() as f64
            / (n * n * (n - 1.0));
    }
    Ok(numer * numer / denom)
}

/// CMH statistic with per-replicate variance estimates.
pub fn cmh_adapted(tables: &[CountTable], variances: &[VariancePair]) -> Result<f64> {
    if tables.is_empty() {
        return Err(Error::EmptyInput);
    }
    if tables.len() != variances.len() {
        return Err(Error::InvalidInput(format!(
            "{} tables but {} variance pairs",
            tables.len(),
            variances.len()
        )));
    }
    let mut numer = 0.0;
    let mut denom = 0.0;
    for (k, (t, v)) in tables.iter().zip(variances).enumerate() {
        if t.n() == 0 {
            return Err(Error::DegenerateMargin {
                replicate: Some(k + 1),
            });
        }
        numer += t.centered_x11();
        denom += t.centered_variance(v.s1_sq, v.s2_sq);
    }
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(numer * numer / denom)
}

/// Classical variance plug-ins for the chi-square test: `x_ip * (xp1/n) * (xp2/n)`.
pub fn classical_chi_square_variances(table: &CountTable) -> VariancePair {
    let n = table.n() as f64;
    let pq = table.xp1() as f64 / n * (table.xp2() as f64 / n);
    VariancePair::new(table.x1p() as f64 * pq, table.x2p() as f64 * pq)
}

/// Classical variance plug-ins for the CMH test: `x_ip * (xp1/n) * (xp2/(n-1))`.
pub fn classical_cmh_variances(table: &CountTable) -> VariancePair {
    let n = table.n() as f64;
    let pq = table.xp1() as f64 / n * (table.xp2() as f64 / (n - 1.0));
    VariancePair::new(table.x1p() as f64 * pq, table.x2p() as f64 * pq)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: CountTable = CountTable::new(20, 10, 10, 20);

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn classic_examples() {
        assert_eq!(chi_square_classic(&CountTable::new(10, 10, 10, 10)).unwrap(), 0.0);
        // 60 * 300^2 / 30^4
        assert!(close(chi_square_classic(&T).unwrap(), 60.0 * 90000.0 / 810000.0, 1e-12));
        assert!(close(chi_square_classic(&T).unwrap(), 6.6667, 1e-4));
        assert_eq!(chi_square_classic(&CountTable::new(3, 6, 5, 10)).unwrap(), 0.0);
    }

    #[test]
    fn classic_rejects_degenerate_margin() {
        let err = chi_square_classic(&CountTable::new(0, 10, 0, 5)).unwrap_err();
        assert!(matches!(err, Error::DegenerateMargin { replicate: None }));
    }

    #[test]
    fn adapted_examples() {
        let q = chi_square_adapted(&T, 7.5, 7.5).unwrap();
        assert!(close(q, chi_square_classic(&T).unwrap(), 1e-12));
        assert_eq!(chi_square_adapted(&CountTable::new(4, 6, 8, 12), 1.0, 2.0).unwrap(), 0.0);
        // (20 - 15)^2 / (0.25 * 6.6667 + 0.25 * 25.913)
        let q = chi_square_adapted(&T, 20.0 / 3.0, 25.913).unwrap();
        assert!(close(q, 25.0 / (0.25 * (20.0 / 3.0 + 25.913)), 1e-12));
        assert!(close(q, 3.069, 1e-3));
    }

    #[test]
    fn adapted_zero_denominator() {
        assert!(matches!(chi_square_adapted(&T, 0.0, 0.0), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn cmh_examples() {
        let one = cmh_classic(&[T]).unwrap();
        assert!(close(one, chi_square_classic(&T).unwrap() * 59.0 / 60.0, 1e-12));
        assert!(close(one, 6.5556, 1e-4));
        let two = cmh_classic(&[T, T]).unwrap();
        assert!(close(two, 2.0 * one, 1e-12));
        assert!(close(two, 13.111, 1e-3));
        let null = [CountTable::new(5, 5, 5, 5), CountTable::new(2, 4, 3, 6), CountTable::new(9, 3, 6, 2)];
        assert_eq!(cmh_classic(&null).unwrap(), 0.0);
    }

    #[test]
    fn cmh_degenerate_reports_replicate() {
        let err = cmh_classic(&[T, CountTable::new(0, 4, 0, 6)]).unwrap_err();
        assert!(matches!(err, Error::DegenerateMargin { replicate: Some(2) }));
    }

    #[test]
    fn cmh_adapted_examples() {
        let v = classical_cmh_variances(&T);
        let a = cmh_adapted(&[T], &[v]).unwrap();
        assert!(close(a, cmh_classic(&[T]).unwrap(), 1e-12));

        let null = [CountTable::new(5, 5, 5, 5), CountTable::new(2, 4, 3, 6)];
        let vs = [VariancePair::new(1.0, 2.0), VariancePair::new(3.0, 1.0)];
        assert_eq!(cmh_adapted(&null, &vs).unwrap(), 0.0);

        let tables = [T, CountTable::new(30, 12, 18, 25)];
        let vs = [VariancePair::new(5.0, 9.0), VariancePair::new(7.0, 3.0)];
        let doubled: Vec<_> = vs.iter().map(|v| VariancePair::new(2.0 * v.s1_sq, 2.0 * v.s2_sq)).collect();
        let base = cmh_adapted(&tables, &vs).unwrap();
        assert!(close(cmh_adapted(&tables, &doubled).unwrap(), base / 2.0, 1e-12));
    }

    #[test]
    fn cmh_adapted_length_mismatch() {
        assert!(cmh_adapted(&[T, T], &[VariancePair::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn flags_label_roundtrip() {
        let f = Flags::ZERO_ADJUSTED | Flags::P2_CLAMPED;
        assert_eq!(f.label(), "ZERO_ADJUSTED,P2_CLAMPED");
        assert_eq!(Flags::parse_label(&f.label()), Some(f));
        assert_eq!(Flags::empty().label(), ".");
        assert_eq!(Flags::parse_label("."), Some(Flags::empty()));
        assert_eq!(Flags::parse_label("BOGUS"), None);
    }

    #[test]
    fn degenerate_result_has_unit_p() {
        let r = TestResult::degenerate(Flags::ZERO_ADJUSTED);
        assert_eq!(r.p_value, 1.0);
        assert!(r.flags.contains(Flags::DEGENERATE_MARGIN | Flags::ZERO_ADJUSTED));
    }
}
