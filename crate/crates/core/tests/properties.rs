use cylstable::constants::{chain_constants, jensen_bound, levy_tail_mass, Method};
use cylstable::experiments::{maximal_solution, willet_wong_check};
use cylstable::hilbert::{apply_semigroup, fractional_norm, norm, CoefRule, DiagonalModel, HSMatrix, Shape};
use cylstable::integral::{integrate, StepIntegrand};
use cylstable::picard::{solve_with_noise, PicardStart, SolverConfig};
use cylstable::rng::{domain, par_draws};
use cylstable::sampling::{extend_dimension, generate_noise_path, uniform_grid, IsotropicStable};
use proptest::prelude::*;

fn state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_contracts(x in prop::collection::vec(-10.0..10.0f64, 1..12), t in 0.0..5.0f64) {
        let model = DiagonalModel::heat_preset(x.len(), x.len(), 1.0, 1.0).unwrap();
        let y = apply_semigroup(&model, t, &x).unwrap();
        prop_assert!(norm(&y) <= norm(&x));
    }

    #[test]
    fn semigroup_law(x in state(8), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let model = DiagonalModel::heat_preset(8, 8, 1.0, 1.0).unwrap();
        let two = apply_semigroup(&model, s, &apply_semigroup(&model, t, &x).unwrap()).unwrap();
        let one = apply_semigroup(&model, s + t, &x).unwrap();
        for ((a, b), xk) in two.iter().zip(&one).zip(&x) {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * xk.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn fractional_norm_grows_with_delta(x in state(6), d1 in 0.0..1.0f64, d2 in 0.0..1.0f64) {
        let model = DiagonalModel::heat_preset(6, 6, 1.0, 1.0).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(fractional_norm(&model, lo, &x) <= fractional_norm(&model, hi, &x) * (1.0 + 1e-15));
    }

    #[test]
    fn chain_ratio_identities(alpha in 0.05..1.95f64, frac in 0.01..0.99f64) {
        let p = frac * alpha;
        let k = chain_constants(alpha, p, 1.0).unwrap();
        prop_assert!((k.c2 / k.c1 - (4.0 - alpha) / (2.0 - alpha)).abs() <= 1e-14 * k.c2 / k.c1);
        let lhs = k.cap_c * (alpha - p) / alpha;
        let rhs = k.c2.powf(p / alpha);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs);
    }

    #[test]
    fn tail_mass_is_alpha_homogeneous(
        gamma in prop::collection::vec(0.1..3.0f64, 1..=3),
        alpha in 0.2..1.9f64,
        c in 0.2..5.0f64,
    ) {
        let scaled: Vec<f64> = gamma.iter().map(|g| c * g).collect();
        let a = levy_tail_mass(&gamma, alpha, Method::Quadrature).unwrap().value;
        let b = levy_tail_mass(&scaled, alpha, Method::Quadrature).unwrap().value;
        prop_assert!((b - c.powf(alpha) * a).abs() <= 1e-6 * b);
    }

    #[test]
    fn jensen_holds(gamma in prop::collection::vec(0.05..3.0f64, 1..=3), alpha in 0.2..1.95f64) {
        let mass = levy_tail_mass(&gamma, alpha, Method::Quadrature).unwrap().value;
        prop_assert!(mass <= jensen_bound(&gamma, alpha).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn projection_inverts_extension(m in 1usize..5, extra in 0usize..4, steps in 1usize..20, seed in any::<u64>()) {
        let path = generate_noise_path(1.3, m, &uniform_grid(1.0, steps), seed).unwrap();
        let wide = extend_dimension(&path, m + extra).unwrap();
        prop_assert_eq!(wide.project(m).unwrap(), path);
    }

    #[test]
    fn integral_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, seed in any::<u64>()) {
        let grid = uniform_grid(1.0, 6);
        let noise = generate_noise_path(1.5, 2, &grid, seed).unwrap();
        let p1 = StepIntegrand::constant(grid.clone(), HSMatrix::from_row_major(2, 2, vec![1.0, 0.5, -0.2, 2.0]).unwrap()).unwrap();
        let p2 = StepIntegrand::new(
            grid.clone(),
            (0..6).map(|k| HSMatrix::diagonal(2, 2, &[k as f64, 1.0])).collect(),
        ).unwrap();
        let lhs = integrate(&p1.combine(a, &p2, b).unwrap(), &noise).unwrap();
        let i1 = integrate(&p1, &noise).unwrap();
        let i2 = integrate(&p2, &noise).unwrap();
        for k in 0..=6 {
            for j in 0..2 {
                let rhs = a * i1.at(k)[j] + b * i2.at(k)[j];
                let scale = 1.0 + (a * i1.at(k)[j]).abs() + (b * i2.at(k)[j]).abs();
                prop_assert!((lhs.at(k)[j] - rhs).abs() <= 64.0 * f64::EPSILON * scale);
            }
        }
    }

    #[test]
    fn stopping_matches_partial_sums(tau in 0usize..=8, seed in any::<u64>()) {
        let grid = uniform_grid(2.0, 8);
        let noise = generate_noise_path(1.2, 3, &grid, seed).unwrap();
        let psi = StepIntegrand::new(
            grid.clone(),
            (0..8).map(|k| HSMatrix::diagonal(2, 3, &[1.0 + k as f64, -0.5])).collect(),
        ).unwrap();
        let full = integrate(&psi, &noise).unwrap();
        let stopped = integrate(&psi.stopped(tau), &noise).unwrap();
        for k in 0..=8 {
            prop_assert_eq!(stopped.at(k), full.at(k.min(tau)));
        }
    }

    #[test]
    fn willett_wong_margin_nonnegative(
        p in 0.0..0.95f64,
        a in 0.0..2.0f64,
        c in 0.05..2.0f64,
        rho in 0.01..1.0f64,
        horizon in 0.1..2.0f64,
    ) {
        let t = uniform_grid(horizon, 2000);
        let v: Vec<f64> = t.iter().map(|s| a * (1.0 + 0.5 * (3.0 * s).sin())).collect();
        let w: Vec<f64> = t.iter().map(|s| c * (1.0 + 0.5 * (2.0 * s).cos())).collect();
        let u: Vec<f64> = maximal_solution(&t, &v, &w, p).unwrap().iter().map(|x| rho * x).collect();
        let r = willet_wong_check(&t, &u, &v, &w, p).unwrap();
        prop_assert!(r.margin >= -1e-6, "margin {}", r.margin);
    }
}

#[test]
fn zero_integrand_gives_zero_path() {
    let grid = uniform_grid(1.0, 10);
    let noise = generate_noise_path(1.5, 3, &grid, 9).unwrap();
    let path = integrate(&StepIntegrand::constant(grid, HSMatrix::zeros(4, 3)).unwrap(), &noise).unwrap();
    assert!((0..=10).all(|k| path.at(k).iter().all(|x| *x == 0.0)));
}

#[test]
fn draws_do_not_depend_on_the_thread_count() {
    let law = IsotropicStable::new(1.4, 3).unwrap();
    let draw = || {
        par_draws(10_000, 77, domain::REPLICA, |r| {
            let mut v = [0.0; 3];
            law.sample_into(r, 1.0, &mut v);
            v
        })
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(draw);
    let many = pool(5).install(draw);
    assert_eq!(one, many);
    let grid = uniform_grid(1.0, 300);
    let a = pool(1).install(|| generate_noise_path(1.4, 4, &grid, 3).unwrap());
    let b = pool(6).install(|| generate_noise_path(1.4, 4, &grid, 3).unwrap());
    assert_eq!(a, b);
}

#[test]
fn zero_diffusion_ignores_the_noise() {
    let model = DiagonalModel::heat_preset(6, 6, 1.0, 1.0)
        .unwrap()
        .with_coefficients(
            CoefRule::Const(0.0),
            CoefRule::Power {
                scale: 1.0,
                exponent: -1.5,
            },
            Shape::Tanh,
        )
        .unwrap();
    let cfg = SolverConfig {
        n: 6,
        m: 6,
        ..SolverConfig::default()
    };
    let x0 = cfg.initial_state();
    let solve_seed = |seed| {
        let noise = generate_noise_path(1.5, 6, &cfg.grid(), seed).unwrap();
        solve_with_noise(&model, &x0, &noise, cfg.tol, cfg.n_max, PicardStart::Flow).unwrap()
    };
    let a = solve_seed(1);
    let b = solve_seed(2);
    assert_eq!(a.sup_distance(&b), 0.0);
}

#[test]
fn picard_gaps_contract_on_the_preset() {
    let model = DiagonalModel::heat_preset(8, 8, 1.0, 1.0).unwrap();
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let noise = generate_noise_path(1.5, 8, &cfg.grid(), seed).unwrap();
        let path = solve_with_noise(
            &model,
            &cfg.initial_state(),
            &noise,
            cfg.tol,
            cfg.n_max,
            PicardStart::Flow,
        )
        .unwrap();
        let rises = path.gaps.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(rises <= 1, "seed {seed}: {:?}", path.gaps);
        let q = path
            .gaps
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .next_back()
            .unwrap();
        assert!(q < 1.0);
    }
}
