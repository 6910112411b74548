use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::report::{ExperimentReport, Table, Verdict};
use crate::hilbert::DiagonalModel;
use crate::picard::{horizon_bounds, picard_trace, solve_with_noise, PicardStart, SolverConfig};
use crate::rng::{derive_seed, domain};
use crate::sampling::{generate_noise_path, NoisePath};
use crate::stats;

fn replica_seed(master: u64, r: usize) -> u64 {
    derive_seed(master, &[domain::REPLICA, r as u64])
}

fn check_dims(model: &DiagonalModel, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    if model.n() != config.n || model.m() != config.m {
        return Err(Error::DimensionMismatch {
            expected: config.n * config.m,
            found: model.n() * model.m(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub iterations: usize,
    pub p: f64,
    pub replicas: usize,
    pub final_threshold: f64,
    pub max_ratio: f64,
    pub tolerance_se: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            iterations: 8,
            p: 1.0,
            replicas: 200,
            final_threshold: 1e-3,
            max_ratio: 0.9,
            tolerance_se: 2.0,
        }
    }
}

/// `E‖X_n(T) - X_{n-1}(T)‖^p` across replicas, `n = 1..=iterations`.
pub fn picard_convergence_experiment(
    model: &DiagonalModel,
    config: &SolverConfig,
    exp: &ConvergenceConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    check_dims(model, config)?;
    if exp.replicas < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: exp.replicas,
        });
    }
    let grid = config.grid();
    let x0 = config.initial_state();
    let diffs: Vec<Vec<f64>> = (0..exp.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let noise = generate_noise_path(config.alpha, config.m, &grid, replica_seed(config.seed, r))?;
            let t = picard_trace(model, &x0, &noise, PicardStart::Flow, exp.iterations)?;
            Ok(t.terminal_diffs.iter().map(|d| d.powf(exp.p)).collect())
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new("convergence", &["n", "mean", "se"]);
    let mut means = Vec::with_capacity(exp.iterations);
    let mut ses = Vec::with_capacity(exp.iterations);
    for j in 0..exp.iterations {
        let col: Vec<f64> = diffs.iter().map(|d| d[j]).collect();
        let (m, se) = stats::mean_se(&col);
        table.push(vec![(j + 1) as f64, m, se]);
        means.push(m);
        ses.push(se);
    }

    let mut report = ExperimentReport::new("picard");
    report
        .param("T", config.horizon)
        .param("M", config.steps)
        .param("n", config.n)
        .param("m", config.m)
        .param("alpha", config.alpha)
        .param("iterations", exp.iterations)
        .param("p", exp.p)
        .param("replicas", exp.replicas);
    report.seeds.push(config.seed);
    if let Some(b) = horizon_bounds(model, config.alpha, config.c_convention)? {
        report.verdicts.push(Verdict::info(
            "horizon_ratio",
            config.horizon / b.t_picard,
            "T / T_max_picard; convergence is proven below 1",
        ));
    }

    let last = *means.last().unwrap_or(&0.0);
    report.verdicts.push(Verdict::check(
        "final",
        last < exp.final_threshold,
        last,
        format!(
            "E|X_n(T)-X_(n-1)(T)|^p at n={} < {}",
            exp.iterations, exp.final_threshold
        ),
    ));
    let worst = (1..means.len())
        .map(|j| {
            let se = (ses[j].powi(2) + ses[j - 1].powi(2)).sqrt();
            means[j] - means[j - 1] - exp.tolerance_se * se
        })
        .fold(f64::NEG_INFINITY, f64::max);
    report.verdicts.push(Verdict::check(
        "decreasing",
        means.len() < 2 || worst <= 0.0,
        worst.max(-0.0),
        format!("mean_(n+1) <= mean_n + {} SE", exp.tolerance_se),
    ));
    let ratios: Vec<f64> = means.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    let q = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    report.verdicts.push(Verdict::check(
        "ratio",
        q < exp.max_ratio,
        q,
        format!("mean of successive ratios < {}", exp.max_ratio),
    ));
    report.tables.push(table);
    report.runtime = start.elapsed();
    Ok(report)
}

/// Per replica: two Picard seeds on the same noise, a shifted initial state
/// on the same noise, and an independent noise.
pub fn uniqueness_experiment(
    model: &DiagonalModel,
    config: &SolverConfig,
    replicas: usize,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    check_dims(model, config)?;
    let grid = config.grid();
    let x0 = config.initial_state();
    let shifted: Vec<f64> = x0.iter().map(|v| v + 0.1).collect();
    let solve =
        |x: &[f64], noise: &NoisePath, s: PicardStart| solve_with_noise(model, x, noise, config.tol, config.n_max, s);
    let rows: Vec<[f64; 6]> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<[f64; 6]> {
            let noise = generate_noise_path(config.alpha, config.m, &grid, replica_seed(config.seed, r))?;
            let a = solve(&x0, &noise, PicardStart::Flow)?;
            let again = solve(&x0, &noise, PicardStart::Flow)?;
            let b = solve(&x0, &noise, PicardStart::Zero)?;
            let c = solve(&shifted, &noise, PicardStart::Flow)?;
            let other = generate_noise_path(config.alpha, config.m, &grid, replica_seed(config.seed, r + replicas))?;
            let d = solve(&x0, &other, PicardStart::Flow)?;
            Ok([
                a.sup_distance(&b),
                a.sup_distance(&again),
                a.sup_distance(&c),
                a.sup_distance(&d),
                a.iteration_count as f64,
                b.iteration_count as f64,
            ])
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        "uniqueness",
        &[
            "replica",
            "d_start",
            "d_rerun",
            "d_x0",
            "d_noise",
            "iter_flow",
            "iter_zero",
        ],
    );
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![i as f64];
        row.extend_from_slice(r);
        table.push(row);
    }
    let max_of = |j: usize| rows.iter().map(|r| r[j]).fold(0.0, f64::max);
    let min_of = |j: usize| rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);

    let mut report = ExperimentReport::new("uniqueness");
    report
        .param("T", config.horizon)
        .param("M", config.steps)
        .param("n", config.n)
        .param("m", config.m)
        .param("alpha", config.alpha)
        .param("tol", config.tol)
        .param("replicas", replicas);
    report.seeds.push(config.seed);
    let agree = rows.iter().filter(|r| r[0] < 10.0 * config.tol).count();
    report.verdicts.push(Verdict::check(
        "picard_seeds",
        agree == replicas,
        max_of(0),
        format!("sup distance < 10*tol in every replica ({agree}/{replicas})"),
    ));
    report.verdicts.push(Verdict::check(
        "determinism",
        max_of(1) == 0.0,
        max_of(1),
        "rerun on identical input is bit-identical",
    ));
    report.verdicts.push(Verdict::info(
        "different_x0",
        max_of(2),
        "same noise, x0 shifted by 0.1; no threshold",
    ));
    report.verdicts.push(Verdict::check(
        "different_noise",
        min_of(3) > 1e-6,
        min_of(3),
        "independent noise must give distance > 1e-6",
    ));
    report.tables.push(table);
    report.runtime = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::report::Status;
    use crate::hilbert::{CoefRule, Shape};

    fn cfg() -> SolverConfig {
        SolverConfig {
            horizon: 0.04,
            steps: 40,
            n: 4,
            m: 4,
            seed: 3,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_and_additive_coefficients() {
        let base = DiagonalModel::heat_preset(4, 4, 1.0, 1.0).unwrap();
        let exp = ConvergenceConfig {
            replicas: 10,
            iterations: 4,
            ..ConvergenceConfig::default()
        };
        let zero = base
            .with_coefficients(CoefRule::Const(0.0), CoefRule::Const(0.0), Shape::Tanh)
            .unwrap();
        let r = picard_convergence_experiment(&zero, &cfg(), &exp).unwrap();
        assert!(r
            .table("convergence")
            .unwrap()
            .column("mean")
            .unwrap()
            .iter()
            .all(|m| *m == 0.0));
        let additive = base
            .with_coefficients(CoefRule::Const(1.0), CoefRule::Const(0.0), Shape::Unit)
            .unwrap();
        let r = picard_convergence_experiment(&additive, &cfg(), &exp).unwrap();
        let means = r.table("convergence").unwrap().column("mean").unwrap();
        assert!(means[0] > 0.0);
        assert!(means[1..].iter().all(|m| *m == 0.0));
    }

    #[test]
    fn uniqueness_on_preset() {
        let model = DiagonalModel::heat_preset(4, 4, 1.0, 1.0).unwrap();
        let r = uniqueness_experiment(&model, &cfg(), 8).unwrap();
        assert_eq!(r.overall(), Status::Pass, "{:?}", r.verdicts);
    }
}
