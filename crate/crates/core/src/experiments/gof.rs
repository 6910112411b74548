use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stats::empirical_cf;

#[derive(Debug, Clone, PartialEq)]
pub struct CfTest {
    pub max_abs_dev: f64,
    /// `3/√N + 0.01`
    pub threshold: f64,
    pub passed: bool,
    pub deviations: Vec<f64>,
}

/// Smallest sample count accepted by [`char_function_test`].
pub const MIN_CF_SAMPLES: usize = 10_000;

/// `max_u |φ̂(u) - target(u)|` for row-major vector samples.
pub fn char_function_test<F>(samples: &[f64], dim: usize, target: F, u_grid: &[Vec<f64>]) -> Result<CfTest>
where
    F: Fn(&[f64]) -> Complex64,
{
    if u_grid.is_empty() {
        return Err(Error::Empty("u_grid"));
    }
    let n = samples.len() / dim.max(1);
    if n < MIN_CF_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_CF_SAMPLES,
            found: n,
        });
    }
    if let Some(u) = u_grid.iter().find(|u| u.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.len(),
        });
    }
    let deviations: Vec<f64> = u_grid
        .iter()
        .map(|u| {
            if u.iter().all(|x| *x == 0.0) {
                0.0
            } else {
                (empirical_cf(samples, dim, u) - target(u)).norm()
            }
        })
        .collect();
    let max_abs_dev = deviations.iter().copied().fold(0.0, f64::max);
    let threshold = 3.0 / (n as f64).sqrt() + 0.01;
    Ok(CfTest {
        max_abs_dev,
        threshold,
        passed: max_abs_dev < threshold,
        deviations,
    })
}

/// `exp(-t |u|^α)`.
pub fn stable_cf(alpha: f64, t: f64) -> impl Fn(&[f64]) -> Complex64 {
    move |u: &[f64]| {
        let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        Complex64::new((-t * r.powf(alpha)).exp(), 0.0)
    }
}

/// Ten fixed test vectors in dimension `dim`, norms from 0.2 to 2.
pub fn default_u_grid(dim: usize) -> Vec<Vec<f64>> {
    (0..10)
        .map(|j| {
            let d: Vec<f64> = (0..dim).map(|k| (1.0 + j as f64 + 2.0 * k as f64).cos()).collect();
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = 0.2 * (j + 1) as f64;
            d.iter().map(|x| s * x / len).collect()
        })
        .collect()
}
