//! Multiple-testing adjustment and the beta-CDF tail correction for
//! anti-conservative small p-values.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::special::incomplete_beta_reg;

pub const DEFAULT_Z: f64 = 0.05;
pub const MIN_MOMENT_SAMPLES: usize = 10;
pub const MIN_TAIL_POINTS: usize = 100;

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn benjamini_hochberg(pvalues: &[f64]) -> Result<Vec<f64>> {
    if pvalues.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidP(p));
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let p = pvalues[idx];
        let q = (p * m as f64 / (rank + 1) as f64).clamp(p, 1.0);
        running = running.min(q);
        adjusted[idx] = running;
    }
    Ok(adjusted)
}

/// Method-of-moments beta fit. Returns `(a, b)`.
pub fn fit_beta_mm(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < MIN_MOMENT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_MOMENT_SAMPLES,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    beta_from_moments(mean, variance)
}

/// Beta parameters matching a given mean and variance.
pub fn beta_from_moments(mean: f64, variance: f64) -> Result<(f64, f64)> {
    let bound = mean * (1.0 - mean);
    // variances at rounding level come from constant samples
    if !(variance > f64::EPSILON * bound && variance < bound) {
        return Err(Error::DegenerateMoments { mean, variance });
    }
    let c = bound / variance - 1.0;
    Ok((mean * c, (1.0 - mean) * c))
}

/// Two nested beta CDFs rescaling p-values below `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionModel {
    pub z: f64,
    pub s: f64,
    pub alpha_a: f64,
    pub beta_a: f64,
    pub alpha_a2: f64,
    pub beta_a2: f64,
}

impl CorrectionModel {
    /// Model whose transform is the identity.
    pub fn identity(z: f64, s: f64) -> Self {
        CorrectionModel {
            z,
            s,
            alpha_a: 1.0,
            beta_a: 1.0,
            alpha_a2: 1.0,
            beta_a2: 1.0,
        }
    }

    /// `s · F_A2(1)`, which is `s`.
    pub fn delta(&self) -> f64 {
        self.s * incomplete_beta_reg(1.0, self.alpha_a2, self.beta_a2)
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.alpha_a, self.beta_a, self.alpha_a2, self.beta_a2]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !(self.z > 0.0 && self.z <= 1.0) {
            return Err(Error::InvalidInput(format!("z = {} outside (0, 1]", self.z)));
        }
        if !(self.s >= 0.0 && self.s <= self.z) {
            return Err(Error::InvalidInput(format!("s = {} outside [0, z]", self.s)));
        }
        if !positive {
            return Err(Error::InvalidInput("beta parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn apply(&self, p: f64) -> f64 {
        apply_correction(self, p)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.fields() {
            // {:?} prints the shortest representation that parses back exactly
            let _ = writeln!(out, "{key}\t{value:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut model = CorrectionModel::identity(f64::NAN, f64::NAN);
        let mut seen = [false; 6];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| Error::Parse { line: i + 1, reason };
            let (key, value) = line
                .split_once(['\t', '=', ' '])
                .ok_or_else(|| parse_err(format!("expected `key value`, got {line:?}")))?;
            let value: f64 = value
                .trim()
                .trim_start_matches('=')
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad number for {key}")))?;
            let slot = match key.trim() {
                "z" => 0,
                "s" => 1,
                "alphaA" => 2,
                "betaA" => 3,
                "alphaA2" => 4,
                "betaA2" => 5,
                other => return Err(parse_err(format!("unknown key {other:?}"))),
            };
            seen[slot] = true;
            *model.field_mut(slot) = value;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "correction model is missing {}",
                model.fields()[missing].0
            )));
        }
        model.validate()?;
        Ok(model)
    }

    fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("z", self.z),
            ("s", self.s),
            ("alphaA", self.alpha_a),
            ("betaA", self.beta_a),
            ("alphaA2", self.alpha_a2),
            ("betaA2", self.beta_a2),
        ]
    }

    fn field_mut(&mut self, slot: usize) -> &mut f64 {
        match slot {
            0 => &mut self.z,
            1 => &mut self.s,
            2 => &mut self.alpha_a,
            3 => &mut self.beta_a,
            4 => &mut self.alpha_a2,
            _ => &mut self.beta_a2,
        }
    }
}

/// Fits the correction on p-values known to come from the null.
/// `s` defaults to `z / 10`.
pub fn fit_tail_correction(null_pvalues: &[f64], z: f64, s: Option<f64>) -> Result<CorrectionModel> {
    let s = s.unwrap_or(z / 10.0);
    let mut model = CorrectionModel::identity(z, s);
    model.validate()?;

    let scaled: Vec<f64> = null_pvalues.iter().filter(|&&p| p < z).map(|p| p / z).collect();
    if scaled.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail {
            got: scaled.len(),
            needed: MIN_TAIL_POINTS,
            z,
        });
    }
    (model.alpha_a, model.beta_a) = fit_beta_mm(&scaled)?;

    let inner: Vec<f64> = scaled
        .iter()
        .map(|&x| z * incomplete_beta_reg(x, model.alpha_a, model.beta_a))
        .filter(|&u| u < s)
        .map(|u| u / s)
        .collect();
    (model.alpha_a2, model.beta_a2) = fit_beta_mm(&inner)?;
    Ok(model)
}

pub fn apply_correction(model: &CorrectionModel, p: f64) -> f64 {
    if p >= model.z {
        return p.min(1.0);
    }
    let u = model.z * incomplete_beta_reg(p.max(0.0) / model.z, model.alpha_a, model.beta_a);
    let corrected = if u < model.s {
        model.s * incomplete_beta_reg(u / model.s, model.alpha_a2, model.beta_a2)
    } else {
        u
    };
    corrected.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bh_examples() {
        assert_eq!(benjamini_hochberg(&[0.3]).unwrap(), vec![0.3]);
        assert_eq!(benjamini_hochberg(&[0.2; 5]).unwrap(), vec![0.2; 5]);
        let q = benjamini_hochberg(&[0.01, 0.02, 0.03, 0.04]).unwrap();
        for v in q {
            assert!((v - 0.04).abs() < 1e-15);
        }
    }

    #[test]
    fn bh_matches_brute_force() {
        // q_i = min over ranks j >= rank(i) of p_(j) m / j
        let p = [0.04, 0.001, 0.5, 0.03, 0.02, 0.9, 0.03, 0.0];
        let q = benjamini_hochberg(&p).unwrap();
        let m = p.len();
        let mut sorted = p.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (i, &pi) in p.iter().enumerate() {
            let rank = sorted.iter().position(|&x| x == pi).unwrap() + sorted.iter().filter(|&&x| x == pi).count();
            let brute = (rank..=m)
                .map(|j| (sorted[j - 1] * m as f64 / j as f64).min(1.0))
                .fold(1.0, f64::min);
            assert!((q[i] - brute).abs() < 1e-15, "{i}");
        }
    }

    #[test]
    fn bh_errors() {
        assert!(matches!(benjamini_hochberg(&[]), Err(Error::EmptyInput)));
        assert!(matches!(benjamini_hochberg(&[0.1, 1.5]), Err(Error::InvalidP(_))));
        assert!(matches!(benjamini_hochberg(&[f64::NAN]), Err(Error::InvalidP(_))));
    }

    #[test]
    fn moments() {
        let (a, b) = beta_from_moments(0.5, 0.05).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        assert!(matches!(fit_beta_mm(&[0.3; 20]), Err(Error::DegenerateMoments { .. })));
        assert!(matches!(fit_beta_mm(&[0.3; 5]), Err(Error::TooFewSamples { .. })));
        let grid: Vec<f64> = (0..100_000).map(|i| (i as f64 + 0.5) / 100_000.0).collect();
        let (a, b) = fit_beta_mm(&grid).unwrap();
        assert!((a - 1.0).abs() < 1e-3 && (b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn identity_model_is_identity() {
        let m = CorrectionModel::identity(0.05, 0.005);
        for p in [0.0, 1e-6, 0.001, 0.004, 0.005, 0.02, 0.049, 0.05, 0.7, 1.0] {
            assert!((apply_correction(&m, p) - p).abs() < 1e-15, "{p}");
        }
        assert_eq!(m.delta(), m.s);
    }

    #[test]
    fn continuity_at_s() {
        let m = CorrectionModel {
            z: 0.05,
            s: 0.005,
            alpha_a: 0.7,
            beta_a: 1.3,
            alpha_a2: 0.8,
            beta_a2: 1.1,
        };
        // p giving u = s exactly: invert F_A by bisection
        let (mut lo, mut hi) = (0.0, m.z);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if m.z * incomplete_beta_reg(mid / m.z, m.alpha_a, m.beta_a) < m.s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((apply_correction(&m, lo) - m.s).abs() < 1e-9);
        assert!((apply_correction(&m, hi) - m.s).abs() < 1e-9);
        assert!((apply_correction(&m, m.z * (1.0 - 1e-12)) - m.z).abs() < 1e-9);
    }

    #[test]
    fn uniform_nulls_give_near_identity() {
        let nulls: Vec<f64> = (0..200_000).map(|i| (i as f64 + 0.5) / 200_000.0).collect();
        let m = fit_tail_correction(&nulls, DEFAULT_Z, None).unwrap();
        assert_eq!(m.s, 0.005);
        assert!((m.delta() - m.s).abs() < 1e-15);
        for p in [1e-5, 1e-4, 1e-3, 0.01, 0.04] {
            assert!((apply_correction(&m, p) / p - 1.0).abs() < 0.01, "{p}");
        }
    }

    #[test]
    fn insufficient_tail() {
        let nulls: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
        assert!(matches!(
            fit_tail_correction(&nulls, 0.05, None),
            Err(Error::InsufficientTail { got: 25, needed: 100, .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let m = CorrectionModel {
            z: 0.05,
            s: 0.005,
            alpha_a: 0.712_345_678_901_234_5,
            beta_a: 1.3,
            alpha_a2: 0.8,
            beta_a2: 1.1,
        };
        assert_eq!(CorrectionModel::from_text(&m.to_text()).unwrap(), m);
        assert!(CorrectionModel::from_text("z\t0.05\n").is_err());
        assert!(CorrectionModel::from_text("q 1\n").is_err());
    }
}
