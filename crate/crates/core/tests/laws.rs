//! Distributional checks of the samplers and experiment examples.

use cylstable::experiments::{char_function_test, default_u_grid, moment_experiment, MomentConfig};
use cylstable::hilbert::HSMatrix;
use cylstable::integral::StepIntegrand;
use cylstable::sampling::{draw_isotropic, draw_positive_stable, draw_scalar_sas, uniform_grid, AlphaParams};
use cylstable::stats::empirical_cf;
use num_complex::Complex64;

const N: usize = 100_000;

fn sign_mean(xs: &[f64], dim: usize, u: &[f64]) -> f64 {
    xs.chunks(dim)
        .map(|x| x.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().signum())
        .sum::<f64>()
        / (xs.len() / dim) as f64
}

#[test]
fn symmetric_samplers_are_symmetric() {
    let bound = 3.0 / (N as f64).sqrt();
    for (i, alpha) in [0.7, 1.0, 1.5, 1.9].into_iter().enumerate() {
        let scalar = draw_scalar_sas(&AlphaParams::standard(alpha).unwrap(), N, 10 + i as u64);
        assert!(sign_mean(&scalar, 1, &[1.0]).abs() < bound);
        let iso = draw_isotropic(alpha, 3, N, 20 + i as u64).unwrap();
        assert!(sign_mean(&iso, 3, &[0.3, -0.4, 0.866]).abs() < bound);
    }
}

#[test]
fn isotropic_cf_is_rotation_invariant() {
    let xs = draw_isotropic(1.3, 2, N, 5).unwrap();
    let (c, s) = (0.8f64, 0.6f64);
    for u in [[0.5, 0.0], [0.7, 0.7], [1.5, -0.2]] {
        let ru = [c * u[0] - s * u[1], s * u[0] + c * u[1]];
        let d = (empirical_cf(&xs, 2, &u) - empirical_cf(&xs, 2, &ru)).norm();
        assert!(d < 2.0 * 3.0 / (N as f64).sqrt(), "{d}");
    }
}

#[test]
fn positive_stable_laplace_transform() {
    let beta = 0.75;
    let xs = draw_positive_stable(beta, N, 6).unwrap();
    for s in [0.5f64, 1.0, 2.0] {
        let est = xs.iter().map(|x| (-s * x).exp()).sum::<f64>() / N as f64;
        assert!((est - (-s.powf(beta)).exp()).abs() < 3.0 / (N as f64).sqrt());
    }
}

#[test]
fn scalar_cf_matches_the_stable_law() {
    let xs = draw_scalar_sas(&AlphaParams::new(1.2, 0.7).unwrap(), N, 8);
    for u in [0.3, 1.0, 2.5] {
        let target = (-(0.7f64 * u).powf(1.2)).exp();
        assert!((empirical_cf(&xs, 1, &[u]) - Complex64::new(target, 0.0)).norm() < 0.015);
    }
}

#[test]
fn gaussian_target_is_rejected() {
    let xs = draw_isotropic(1.5, 3, N, 9).unwrap();
    let gauss = |u: &[f64]| Complex64::new((-u.iter().map(|x| x * x).sum::<f64>()).exp(), 0.0);
    let r = char_function_test(&xs, 3, gauss, &default_u_grid(3)).unwrap();
    assert!(r.max_abs_dev > 0.05 && !r.passed);
}

#[test]
fn rank_one_first_moment_is_stable() {
    let psi = StepIntegrand::constant(uniform_grid(1.0, 10), HSMatrix::rank_one(2, 2, 0, 1, 1.0)).unwrap();
    let small = moment_experiment(&psi, &MomentConfig::new(1.5, vec![1.0], 10_000, 3)).unwrap();
    let large = moment_experiment(&psi, &MomentConfig::new(1.5, vec![1.0], 100_000, 4)).unwrap();
    let m = |r: &cylstable::experiments::ExperimentReport| r.table("moments").unwrap().rows[0][1];
    assert!((m(&small) / m(&large) - 1.0).abs() < 0.2);
}
