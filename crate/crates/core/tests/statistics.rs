use driftscan::adjust::{fit_tail_correction, DEFAULT_Z};
use driftscan::sim::{sample_and_pool, simulate_trajectory, Coverage};
use driftscan::special::chi2_sf;
use driftscan::stats::{chi_square_classic, CountTable};
use driftscan::variance::drift_variance_exact;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn classical_test_holds_its_level_under_binomial_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let mut rejected = 0;
    for _ in 0..n {
        let p = rng.random_range(0.1..0.9);
        let b = Binomial::new(500, p).unwrap();
        let (a, c) = (b.sample(&mut rng), b.sample(&mut rng));
        let t = CountTable::from_rows([a, 500 - a], [c, 500 - c]);
        if chi2_sf(chi_square_classic(&t).unwrap()) < 0.05 {
            rejected += 1;
        }
    }
    let frac = rejected as f64 / n as f64;
    assert!((0.045..=0.055).contains(&frac), "{frac}");
}

#[test]
fn neutral_frequency_is_a_martingale() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gens = [0, 20, 60];
    let trajs: Vec<Vec<f64>> = (0..20_000).map(|_| simulate_trajectory(0.3, 300, &gens, 0.0, 0.5, &mut rng)).collect();
    for i in 1..gens.len() {
        let (m, _) = mean_var(&trajs.iter().map(|t| t[i]).collect::<Vec<_>>());
        assert!((m - 0.3).abs() < 0.005, "generation {}: {m}", gens[i]);
    }
}

#[test]
fn positive_selection_raises_the_mean_frequency() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gens: Vec<u32> = (0..=6).map(|i| i * 10).collect();
    let trajs: Vec<Vec<f64>> = (0..2000).map(|_| simulate_trajectory(0.2, 300, &gens, 0.1, 0.5, &mut rng)).collect();
    let means: Vec<f64> = (0..gens.len()).map(|i| trajs.iter().map(|t| t[i]).sum::<f64>() / 2000.0).collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

#[test]
fn drift_variance_matches_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (p0, ne, t) = (0.4, 200, 50);
    let end: Vec<f64> = (0..40_000).map(|_| simulate_trajectory(p0, ne, &[0, t], 0.0, 0.5, &mut rng)[1]).collect();
    let (_, v) = mean_var(&end);
    let expected = drift_variance_exact(p0, ne, t);
    assert!((v / expected - 1.0).abs() < 0.05, "{v} vs {expected}");
}

#[test]
fn two_step_read_variance_matches_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (p, x, r) = (0.35, 200u64, 80u64);
    let reads: Vec<f64> = (0..40_000)
        .map(|_| sample_and_pool(p, x, Coverage::Fixed(r), &mut rng).0.read_count as f64)
        .collect();
    let (m, v) = mean_var(&reads);
    let expected = r as f64 * p * (1.0 - p) * (1.0 + (r as f64 - 1.0) / x as f64);
    assert!((m / (r as f64 * p) - 1.0).abs() < 0.01);
    assert!((v / expected - 1.0).abs() < 0.05, "{v} vs {expected}");
}

#[test]
fn correction_fitted_on_uniform_nulls_stays_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ps: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
    let (fit, check) = ps.split_at(100_000);
    let model = fit_tail_correction(fit, DEFAULT_Z, None).unwrap();
    let mut corrected: Vec<f64> = check.iter().map(|&p| model.apply(p)).collect();
    corrected.sort_by(f64::total_cmp);
    let n = corrected.len() as f64;
    let ks = corrected
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).abs().max(((i + 1) as f64 / n - u).abs()))
        .fold(0.0, f64::max);
    assert!(ks <= 0.01, "KS distance {ks}");
}
