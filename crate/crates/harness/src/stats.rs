//! Statistics for Monte-Carlo tables.

use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Two-sided Clopper-Pearson interval for `errors` out of `trials` at
/// confidence `1 − alpha`.
pub fn clopper_pearson(errors: u64, trials: u64, alpha: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (errors as f64, trials as f64);
    let lo = if errors == 0 { 0.0 } else { Beta::new(k, n - k + 1.0).expect("valid shape").inverse_cdf(alpha / 2.0) };
    let hi = if errors == trials { 1.0 } else { Beta::new(k + 1.0, n - k).expect("valid shape").inverse_cdf(1.0 - alpha / 2.0) };
    (lo, hi)
}

/// Two-sided p-value of the pooled two-proportion z-test.
pub fn two_proportion_p(e1: u64, n1: u64, e2: u64, n2: u64) -> f64 {
    let (p1, p2) = (e1 as f64 / n1 as f64, e2 as f64 / n2 as f64);
    let pooled = (e1 + e2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return if p1 == p2 { 1.0 } else { 0.0 };
    }
    let z = ((p1 - p2) / se).abs();
    2.0 * (1.0 - std_normal().cdf(z))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Sample mean and (unbiased) variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Excess kurtosis `m4/m2² − 3` with population moments.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
        let d2 = (x - mean).powi(2);
        (a + d2, b + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    m4 / (m2 * m2) - 3.0
}

/// Kolmogorov-Smirnov distance between the sample and the normal law with
/// the sample's own mean and variance.
pub fn ks_to_fitted_normal(xs: &[f64]) -> f64 {
    let (mean, var) = mean_var(xs);
    let law = Normal::new(mean, var.sqrt()).expect("positive variance");
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = law.cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Equal-width histogram over `[lo, hi)` as `(bin centre, density)` pairs.
pub fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in xs {
        if x >= lo && x < hi {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let total = xs.len() as f64;
    counts.iter().enumerate().map(|(i, &c)| (lo + (i as f64 + 0.5) * width, c as f64 / (total * width))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn clopper_pearson_reference_values() {
        // 5 of 50: exact interval (0.03327, 0.21813)
        let (lo, hi) = clopper_pearson(5, 50, 0.05);
        assert!((lo - 0.033_27).abs() < 1e-4 && (hi - 0.218_13).abs() < 1e-4, "{lo} {hi}");
        // zero errors: upper bound 1 − (α/2)^(1/n)
        let (lo, hi) = clopper_pearson(0, 100, 0.05);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-9);
    }

    #[test]
    fn two_proportion_reference_value() {
        // z = (0.1 − 0.15)/sqrt(0.125·0.875·(2/400)) = −2.138
        let p = two_proportion_p(40, 400, 60, 400);
        assert!((p - 0.032_5).abs() < 5e-4, "{p}");
        assert_eq!(two_proportion_p(0, 10, 0, 10), 1.0);
    }

    #[test]
    fn moments_of_simple_samples() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
        // two-point distribution: kurtosis 1, excess −2
        assert!((excess_kurtosis(&[-1.0, 1.0, -1.0, 1.0]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn normal_samples_look_normal_and_uniform_ones_do_not() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let normal: Vec<f64> = (0..50_000).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        assert!(ks_to_fitted_normal(&normal) < 0.01);
        assert!(excess_kurtosis(&normal).abs() < 0.1);
        let uniform: Vec<f64> = (0..50_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_to_fitted_normal(&uniform) > 0.03);
    }

    #[test]
    fn histogram_integrates_to_covered_mass() {
        let xs = [0.1, 0.2, 0.6, 0.9, 1.5];
        let h = histogram(&xs, 0.0, 1.0, 4);
        let mass: f64 = h.iter().map(|(_, d)| d * 0.25).sum();
        assert!((mass - 0.8).abs() < 1e-12);
    }
}
