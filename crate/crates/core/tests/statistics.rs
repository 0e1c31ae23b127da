//! Distributional properties of projected distances, checked against an
//! independent chi-squared implementation.

use pmlsh::projection::{
    chi2_upper_quantile, chi2_upper_tail, estimate_distance_sq, HashFamily, DEFAULT_ALPHA1,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const M: usize = 15;

/// `r'^2 / r^2` for `trials` random pairs at distance `r`, each projected
/// by its own freshly seeded family.
fn distance_ratios(trials: usize, d: usize, r: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|i| {
            let family =
                HashFamily::new(d, M, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)).unwrap();
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let b: Vec<f64> = a.iter().zip(&dir).map(|(x, u)| x + r * u / norm).collect();
            let pa = family.project(&a, 0).unwrap();
            let pb = family.project(&b, 1).unwrap();
            M as f64 * estimate_distance_sq(&pa, &pb, M).unwrap() / (r * r)
        })
        .collect()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn estimator_is_unbiased_with_chi_squared_spread() {
    let r = 2.5;
    let ratios = distance_ratios(10_000, 24, r, 1);
    let (mean, var) = mean_var(&ratios);
    // mean of r_hat^2 is r^2 <=> mean of m r_hat^2 / r^2 is m
    assert!((mean / M as f64 - 1.0).abs() < 0.02, "mean {mean}");
    assert!(
        (var / (2.0 * M as f64) - 1.0).abs() < 0.10,
        "variance {var}"
    );
}

#[test]
fn ratio_passes_kolmogorov_smirnov() {
    let mut ratios = distance_ratios(10_000, 24, 1.0, 2);
    ratios.sort_by(f64::total_cmp);
    let law = ChiSquared::new(M as f64).unwrap();
    let n = ratios.len() as f64;
    let ks = ratios
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    // asymptotic critical value at significance 0.01
    assert!(ks < 1.628 / n.sqrt(), "KS statistic {ks}");
}

#[test]
fn lower_tail_fractions_match_confidence_levels() {
    let ratios = distance_ratios(100_000, 6, 3.0, 3);
    for alpha in [0.05, 0.1405, DEFAULT_ALPHA1] {
        let bound = chi2_upper_quantile(1.0 - alpha, M).unwrap();
        let frac = ratios.iter().filter(|&&x| x < bound).count() as f64 / ratios.len() as f64;
        assert!(
            (frac - alpha).abs() <= 0.01,
            "alpha {alpha}: fraction {frac}"
        );
    }
}

#[test]
fn quantiles_agree_with_independent_cdf() {
    for dof in [1, 2, 5, 15, 40, 120] {
        let law = ChiSquared::new(dof as f64).unwrap();
        for i in 1..100 {
            let alpha = 0.001 + 0.998 * i as f64 / 100.0;
            let x = chi2_upper_quantile(alpha, dof).unwrap();
            assert!((law.sf(x) - alpha).abs() < 1e-9, "dof {dof} alpha {alpha}");
            assert!((chi2_upper_tail(x, dof) - law.sf(x)).abs() < 1e-10);
        }
    }
}
