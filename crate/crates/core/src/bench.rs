//! Method comparison on labelled data: type-I error on neutral loci, power on
//! selected loci and time spent computing statistics and p-values.

use std::collections::HashMap;
use std::io::BufRead;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::locus::LocusCounts;
use crate::scan::{test_locus, TestPlan};
use crate::sim::{empirical_fdr_cutoff, simulate_range, Observed, SimConfig};
use crate::variance::StatisticKind;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub label: String,
    /// p-value cutoff; loci with `p <= threshold` are rejected.
    pub threshold: f64,
    pub type_i: Option<f64>,
    /// `None` when no locus is selected.
    pub power: Option<f64>,
    pub seconds: f64,
    pub n_neutral: usize,
    pub n_selected: usize,
}

/// p-values for every locus, in order.
pub fn pvalues(loci: &[LocusCounts], plan: &TestPlan) -> Vec<f64> {
    loci.iter().map(|l| test_locus(l, plan).p_value).collect()
}

/// Rejection rates among neutral and selected loci at `p <= threshold`.
pub fn rates(pvalues: &[f64], selected: &[bool], threshold: f64) -> (Option<f64>, Option<f64>) {
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&p, &sel) in pvalues.iter().zip(selected) {
        totals[sel as usize] += 1;
        hits[sel as usize] += (p <= threshold) as usize;
    }
    let frac = |k: usize| (totals[k] > 0).then(|| hits[k] as f64 / totals[k] as f64);
    (frac(0), frac(1))
}

pub fn evaluate(loci: &[LocusCounts], selected: &[bool], plan: &TestPlan, threshold: f64) -> MethodReport {
    let start = Instant::now();
    let ps = pvalues(loci, plan);
    let seconds = start.elapsed().as_secs_f64();
    report(plan.label(), &ps, selected, threshold, seconds)
}

fn report(label: String, ps: &[f64], selected: &[bool], threshold: f64, seconds: f64) -> MethodReport {
    let (type_i, power) = rates(ps, selected, threshold);
    let n_selected = selected.iter().filter(|&&s| s).count();
    MethodReport {
        label,
        threshold,
        type_i,
        power,
        seconds,
        n_neutral: selected.len() - n_selected,
        n_selected,
    }
}

/// Loci of a sampling-only simulation with the layout of `cfg`, as read counts.
pub fn sampling_only_reference(cfg: &SimConfig, n_loci: u64) -> Vec<LocusCounts> {
    let null_cfg = SimConfig {
        n_loci,
        seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15,
        ..cfg.sampling_only()
    };
    simulate_range(&null_cfg, 0..n_loci)
        .iter()
        .map(|l| {
            let mut counts = l.counts(&null_cfg.generations, null_cfg.sample_size, Observed::Reads);
            counts.zero_adjust();
            counts
        })
        .collect()
}

/// Classical chi-square with the rejection cutoff taken as the `alpha`
/// quantile of its p-values on `reference` loci.
pub fn evaluate_empirical_fdr(
    loci: &[LocusCounts],
    selected: &[bool],
    reference: &[LocusCounts],
    alpha: f64,
) -> Result<MethodReport> {
    let plan = TestPlan::classical(StatisticKind::ChiSquare);
    let cutoff = empirical_fdr_cutoff(&pvalues(reference, &plan), alpha)?;
    let start = Instant::now();
    let ps = pvalues(loci, &plan);
    let seconds = start.elapsed().as_secs_f64();
    Ok(report("Q-classic+empirical-FDR".into(), &ps, selected, cutoff, seconds))
}

/// The standard comparison: classical Q with an empirical cutoff, raw
/// classical CMH, and the adapted Q and CMH with and without intermediate
/// generations (the latter only when the data has them).
pub fn compare_methods(
    loci: &[LocusCounts],
    selected: &[bool],
    reference: &[LocusCounts],
    ne: u64,
    alpha: f64,
) -> Result<Vec<MethodReport>> {
    if loci.len() != selected.len() {
        return Err(Error::InvalidInput("one label per locus required".into()));
    }
    let mut out = vec![evaluate_empirical_fdr(loci, selected, reference, alpha)?];
    out.push(evaluate(loci, selected, &TestPlan::classical(StatisticKind::Cmh), alpha));
    let intermediate = loci.iter().any(|l| l.replicates.iter().any(|r| r.len() > 2));
    for ig in [false, true] {
        if ig && !intermediate {
            continue;
        }
        for kind in [StatisticKind::ChiSquare, StatisticKind::Cmh] {
            out.push(evaluate(loci, selected, &TestPlan::adapted(kind, ne, ig), alpha));
        }
    }
    Ok(out)
}

pub fn format_reports(reports: &[MethodReport]) -> String {
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
    let mut s = String::from("method\tthreshold\ttype_I\tpower\tseconds\tneutral\tselected\n");
    for r in reports {
        s.push_str(&format!(
            "{}\t{:.6}\t{}\t{}\t{:.4}\t{}\t{}\n",
            r.label,
            r.threshold,
            fmt(r.type_i),
            fmt(r.power),
            r.seconds,
            r.n_neutral,
            r.n_selected
        ));
    }
    s
}

/// Reads `(chrom, pos) -> selected` from a truth table written by the simulator.
pub fn read_truth<R: BufRead>(input: R) -> Result<HashMap<(String, u64), bool>> {
    let mut labels = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: i + 1, reason };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 5 {
            return Err(err("truth row needs chrom, pos, s, h, label".into()));
        }
        let pos = f[1].parse().map_err(|_| err(format!("bad position {:?}", f[1])))?;
        let selected = match f[4] {
            "selected" => true,
            "neutral" => false,
            other => return Err(err(format!("label {other:?} is neither selected nor neutral"))),
        };
        labels.insert((f[0].to_string(), pos), selected);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_split_by_label() {
        let ps = [0.01, 0.5, 0.04, 0.2, 0.001];
        let sel = [false, false, false, true, true];
        let (t1, pw) = rates(&ps, &sel, 0.05);
        assert!((t1.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pw, Some(0.5));
        assert_eq!(rates(&ps, &[false; 5], 0.05).1, None);
    }

    #[test]
    fn comparison_lists_methods() {
        let cfg = SimConfig::neutral(50, 2, 3).with_generations(vec![0, 30, 60]);
        let loci: Vec<LocusCounts> = simulate_range(&cfg, 0..50)
            .iter()
            .map(|l| l.counts(&cfg.generations, cfg.sample_size, Observed::Reads))
            .collect();
        let reference = sampling_only_reference(&cfg, 200);
        let reports = compare_methods(&loci, &[false; 50], &reference, 300, 0.05).unwrap();
        let labels: Vec<&str> = reports.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(
            labels,
            ["Q-classic+empirical-FDR", "CMH-classic", "Q-adapted", "CMH-adapted", "Q-adapted-ig", "CMH-adapted-ig"]
        );
        assert!(reports.iter().all(|r| r.power.is_none()));
        assert!(format_reports(&reports).contains("\tNA\t"));
    }

    #[test]
    fn sampling_only_reference_is_static() {
        let cfg = SimConfig::neutral(0, 1, 9);
        let sims = simulate_range(&cfg.sampling_only(), 0..20);
        for l in sims {
            let f = &l.replicates[0];
            assert_eq!(f[0].true_freq, f[1].true_freq);
        }
    }

    #[test]
    fn truth_table() {
        let text = "chrom\tpos\ts\th\tlabel\tp0\ttrue_freqs\nsim\t1\t0\t0.5\tneutral\t0.3\t0.3,0.2\nsim\t2\t0.1\t0.5\tselected\t0.3\t0.3,0.5\n";
        let t = read_truth(text.as_bytes()).unwrap();
        assert!(t[&("sim".to_string(), 2)]);
        assert!(read_truth("h\nsim\t1\t0\t0.5\tmaybe\n".as_bytes()).is_err());
    }
}
