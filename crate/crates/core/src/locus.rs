//! Bi-allelic counts of one locus across replicates and time points.

use crate::stats::CountTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimePoint {
    pub generation: u32,
    /// Allele-1 and allele-2 counts (reads, or sampled alleles).
    pub counts: [u64; 2],
    /// Alleles sampled before pool sequencing; `None` for one-step data.
    pub pool_size: Option<u64>,
}

impl TimePoint {
    pub fn depth(&self) -> u64 {
        self.counts[0] + self.counts[1]
    }
}

/// `replicates[k]` holds replicate `k`'s time points in increasing generation order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocusCounts {
    pub replicates: Vec<Vec<TimePoint>>,
}

impl LocusCounts {
    pub fn new(replicates: Vec<Vec<TimePoint>>) -> Self {
        LocusCounts { replicates }
    }

    /// Base-vs-final table of replicate `k`.
    pub fn endpoint_table(&self, k: usize) -> Option<CountTable> {
        let tps = self.replicates.get(k)?;
        if tps.len() < 2 {
            return None;
        }
        let (first, last) = (tps[0], tps[tps.len() - 1]);
        Some(CountTable::from_rows(first.counts, last.counts))
    }

    /// Sets an allele count of 0 to 1 when the same allele is seen at another
    /// time point of the same replicate. Returns whether anything changed.
    pub fn zero_adjust(&mut self) -> bool {
        let mut changed = false;
        for tps in &mut self.replicates {
            for allele in 0..2 {
                let seen = tps.iter().any(|tp| tp.counts[allele] > 0);
                if !seen {
                    continue;
                }
                for tp in tps.iter_mut().filter(|tp| tp.counts[allele] == 0) {
                    tp.counts[allele] = 1;
                    changed = true;
                }
            }
        }
        changed
    }

    /// Allele frequencies in the base population, pooled over replicates.
    pub fn base_frequencies(&self) -> Option<[f64; 2]> {
        let mut totals = [0u64; 2];
        for tps in &self.replicates {
            if let Some(tp) = tps.first() {
                totals[0] += tp.counts[0];
                totals[1] += tp.counts[1];
            }
        }
        let depth = totals[0] + totals[1];
        (depth > 0).then(|| [totals[0] as f64 / depth as f64, totals[1] as f64 / depth as f64])
    }
}

/// Keeps a locus iff both base-population allele frequencies exceed `min_af`.
/// `min_af = 0` disables the filter.
pub fn filter_min_af(counts: &LocusCounts, min_af: f64) -> bool {
    if min_af <= 0.0 {
        return true;
    }
    match counts.base_frequencies() {
        Some([f1, f2]) => f1 > min_af && f2 > min_af,
        None => false,
    }
}
