//! Small statistical toolbox used by the experiments.

use num_complex::Complex64;
use rand::Rng;

use crate::rng;

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS statistic at `level`.
pub fn ks_critical(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `ln y` against `ln x`, skipping non-positive `y`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    (lx.len() >= 2).then(|| linear_fit(&lx, &ly).0)
}

pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_mean_ci(xs: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = rng::stream(seed, &[rng::domain::BOOTSTRAP]);
    let n = xs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = ((1.0 - level) / 2.0 * resamples as f64).floor() as usize;
    let hi = (((1.0 + level) / 2.0) * resamples as f64).ceil() as usize;
    (means[lo.min(resamples - 1)], means[hi.min(resamples - 1)])
}

/// Hill estimator of the tail index from the `k` largest of `xs`.
pub fn hill_estimate(xs: &[f64], k: usize) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| *x > 0.0).collect();
    if k == 0 || k >= v.len() {
        return None;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    let xk = v[k];
    let s: f64 = v[..k].iter().map(|x| (x / xk).ln()).sum();
    (s > 0.0).then(|| k as f64 / s)
}

/// Empirical characteristic function of vector samples (row-major, `dim`
/// columns) at `u`.
pub fn empirical_cf(samples: &[f64], dim: usize, u: &[f64]) -> Complex64 {
    let n = samples.len() / dim;
    let (mut re, mut im) = (0.0, 0.0);
    for row in samples.chunks_exact(dim) {
        let phase: f64 = row.iter().zip(u).map(|(x, v)| x * v).sum();
        re += phase.cos();
        im += phase.sin();
    }
    Complex64::new(re / n as f64, im / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [0.3, 0.1, 0.2];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn ks_critical_matches_table_value() {
        // 1% level: c = 1.6276
        let c = ks_critical(100, 100, 0.01) / (0.02f64).sqrt();
        assert!((c - 1.6276).abs() < 1e-3);
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let x: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn hill_on_pareto_quantiles() {
        // deterministic Pareto(2) quantiles
        let n = 20_000;
        let xs: Vec<f64> = (1..=n)
            .map(|i| (1.0 - (i as f64 - 0.5) / n as f64).powf(-0.5))
            .collect();
        let a = hill_estimate(&xs, 2000).unwrap();
        assert!((a - 2.0).abs() < 0.05, "{a}");
    }

    #[test]
    fn bootstrap_interval_brackets_mean() {
        let xs: Vec<f64> = (0..500).map(|i| (i % 17) as f64).collect();
        let (m, _) = mean_se(&xs);
        let (lo, hi) = bootstrap_mean_ci(&xs, 200, 0.95, 1);
        assert!(lo < m && m < hi);
    }
}
