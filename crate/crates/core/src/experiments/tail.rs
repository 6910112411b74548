use std::time::Instant;

use crate::constants::{levy_tail_mass, Method};
use crate::error::{check_alpha, invalid, Error, Result};
use crate::experiments::report::{ExperimentReport, Status, Table, Verdict};
use crate::hilbert::{norm, HSMatrix};
use crate::integral::StepIntegrand;
use crate::rng::{self, domain};
use crate::sampling::IsotropicStable;
use crate::stats;

/// What the tail experiment measures.
#[derive(Debug, Clone)]
pub enum TailTarget {
    /// `‖ψ(L(t))‖`.
    Operator(HSMatrix),
    /// `sup_k ‖I(t_k)‖` for the integral of a step integrand.
    Integrand(StepIntegrand),
}

impl TailTarget {
    fn is_zero(&self) -> bool {
        match self {
            TailTarget::Operator(p) => p.is_zero(),
            TailTarget::Integrand(s) => s.values().iter().all(HSMatrix::is_zero),
        }
    }

    fn noise_dim(&self) -> usize {
        match self {
            TailTarget::Operator(p) => p.cols(),
            TailTarget::Integrand(s) => s.shape().1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TailConfig {
    pub alpha: f64,
    /// Time of `L(t)`; unused for integrands, whose grid sets the horizon.
    pub t: f64,
    pub samples: usize,
    pub r_grid: Vec<f64>,
    /// Plateau window `[lo, hi]`; `None` takes the top half of `r_grid`.
    pub window: Option<(f64, f64)>,
    pub seed: u64,
    pub flat_ratio: f64,
    pub level_rel: f64,
    pub level_se: f64,
    pub slope_tol: f64,
    pub min_exceedances: usize,
    pub min_samples: usize,
}

impl TailConfig {
    pub fn new(alpha: f64, samples: usize, r_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            alpha,
            t: 1.0,
            samples,
            r_grid,
            window: None,
            seed,
            flat_ratio: 1.5,
            level_rel: 0.15,
            level_se: 3.0,
            slope_tol: 0.1,
            min_exceedances: 50,
            min_samples: 100_000,
        }
    }
}

/// `count` geometrically spaced radii from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Independent draws of the measured norm.
pub fn tail_samples(target: &TailTarget, alpha: f64, t: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let law = IsotropicStable::new(alpha, target.noise_dim())?;
    match target {
        TailTarget::Operator(psi) => {
            if !(t > 0.0) {
                return Err(invalid("t", "must be positive"));
            }
            let factor = t.powf(1.0 / alpha);
            let m = psi.cols();
            Ok(rng::par_draws(count, seed, domain::REPLICA, |r| {
                let mut v = vec![0.0; m];
                law.sample_into(r, factor, &mut v);
                let mut out = vec![0.0; psi.rows()];
                psi.apply_into(&v, &mut out);
                norm(&out)
            }))
        }
        TailTarget::Integrand(s) => {
            let (n, m) = s.shape();
            let factors: Vec<f64> = s.grid().windows(2).map(|w| (w[1] - w[0]).powf(1.0 / alpha)).collect();
            Ok(rng::par_draws(count, seed, domain::REPLICA, |r| {
                let mut inc = vec![0.0; m];
                let mut term = vec![0.0; n];
                let mut acc = vec![0.0; n];
                let mut sup: f64 = 0.0;
                for (psi, f) in s.values().iter().zip(&factors) {
                    law.sample_into(r, *f, &mut inc);
                    psi.apply_into(&inc, &mut term);
                    for (a, t) in acc.iter_mut().zip(&term) {
                        *a += t;
                    }
                    sup = sup.max(norm(&acc));
                }
                sup
            }))
        }
    }
}

/// `r^α P̂(X > r)` over `r_grid` with binomial errors, plateau and slope
/// verdicts.
pub fn tail_experiment(target: &TailTarget, config: &TailConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let a = config.alpha;
    check_alpha(a, 0.0, 2.0)?;
    if config.samples < config.min_samples {
        return Err(Error::InsufficientSamples {
            needed: config.min_samples,
            found: config.samples,
        });
    }
    if config.r_grid.len() < 2 || config.r_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("r_grid", "need at least two positive radii"));
    }
    let mut r_grid = config.r_grid.clone();
    r_grid.sort_by(f64::total_cmp);

    let mut xs = tail_samples(target, a, config.t, config.samples, config.seed)?;
    xs.sort_by(f64::total_cmp);
    let nf = config.samples as f64;
    let counts: Vec<usize> = r_grid
        .iter()
        .map(|&r| xs.len() - xs.partition_point(|x| *x <= r))
        .collect();
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();

    let mut table = Table::new("tail", &["r", "exceedances", "p_hat", "p_se", "scaled", "scaled_se"]);
    for (i, &r) in r_grid.iter().enumerate() {
        let se = stats::binomial_se(p[i], config.samples);
        let ra = r.powf(a);
        table.push(vec![r, counts[i] as f64, p[i], se, ra * p[i], ra * se]);
    }

    let window: Vec<usize> = match config.window {
        Some((lo, hi)) => (0..r_grid.len())
            .filter(|&i| r_grid[i] >= lo && r_grid[i] <= hi)
            .collect(),
        None => (r_grid.len() / 2..r_grid.len()).collect(),
    };
    if window.is_empty() {
        return Err(invalid("window", "no radius of r_grid falls in the plateau window"));
    }
    // window mean of r^α P̂ and its exact multinomial standard error
    let w = window.len() as f64;
    let plateau = window.iter().map(|&i| r_grid[i].powf(a) * p[i]).sum::<f64>() / w;
    let mut var = 0.0;
    for &i in &window {
        for &j in &window {
            let cov = p[i.max(j)] - p[i] * p[j];
            var += r_grid[i].powf(a) * r_grid[j].powf(a) * cov;
        }
    }
    let plateau_se = (var / (w * w * nf)).max(0.0).sqrt();

    let mut report = ExperimentReport::new("tail");
    report
        .param("alpha", a)
        .param("t", config.t)
        .param("N", config.samples)
        .param("r_min", r_grid[0])
        .param("r_max", r_grid[r_grid.len() - 1])
        .param("window_lo", r_grid[window[0]])
        .param("window_hi", r_grid[*window.last().unwrap()]);
    report.seeds.push(config.seed);
    report.tables.push(table);
    report
        .verdicts
        .push(Verdict::info("plateau", plateau, "window mean of r^alpha P"));
    report
        .verdicts
        .push(Verdict::info("plateau_se", plateau_se, "multinomial standard error"));

    if target.is_zero() {
        report.verdicts.push(Verdict::check(
            "level",
            plateau == 0.0,
            plateau,
            "zero operator: mass 0",
        ));
        report.runtime = start.elapsed();
        return Ok(report);
    }

    let resolved = counts[counts.len() - 1] >= config.min_exceedances;
    let gate = |v: Verdict| {
        if resolved {
            v
        } else {
            Verdict {
                status: Status::Inconclusive,
                ..v
            }
        }
    };

    let scaled: Vec<f64> = window.iter().map(|&i| r_grid[i].powf(a) * p[i]).collect();
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    report.verdicts.push(gate(Verdict::check(
        "flatness",
        ratio <= config.flat_ratio,
        ratio,
        format!("max/min of r^alpha P over window <= {}", config.flat_ratio),
    )));

    match target {
        TailTarget::Operator(psi) => {
            let m = levy_tail_mass(&psi.singular_values(), a, Method::Auto)?;
            let expect = config.t * m.value;
            let se = (plateau_se.powi(2) + (config.t * m.stderr).powi(2)).sqrt();
            let tol = config.level_rel * expect + config.level_se * se;
            report.verdicts.push(gate(Verdict::check(
                "level",
                (plateau - expect).abs() <= tol,
                plateau,
                format!(
                    "|plateau - t*levy_tail_mass| <= {}*{} + {}*SE = {}",
                    config.level_rel,
                    crate::csv::real(expect),
                    config.level_se,
                    crate::csv::real(tol)
                ),
            )));
        }
        TailTarget::Integrand(s) => {
            let mut big_jump = 0.0;
            for (psi, w) in s.values().iter().zip(s.grid().windows(2)) {
                big_jump += (w[1] - w[0]) * levy_tail_mass(&psi.singular_values(), a, Method::Auto)?.value;
            }
            report.verdicts.push(Verdict::info(
                "level_single_jump",
                big_jump,
                "sum of dt * levy_tail_mass over steps",
            ));
        }
    }

    match stats::loglog_slope(&r_grid, &p) {
        Some(slope) => report.verdicts.push(gate(Verdict::check(
            "slope",
            (slope + a).abs() <= config.slope_tol,
            slope,
            format!("log-log slope = -{a} +/- {}", config.slope_tol),
        ))),
        None => report.verdicts.push(Verdict {
            status: Status::Inconclusive,
            ..Verdict::check("slope", false, f64::NAN, "needs two positive exceedance rates")
        }),
    }
    let k = counts[0].min(xs.len() - 1);
    if let Some(h) = stats::hill_estimate(&xs, k) {
        report.verdicts.push(Verdict::info(
            "hill",
            h,
            format!("Hill index from the {k} largest samples"),
        ));
    }
    report.runtime = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::uniform_grid;

    #[test]
    fn zero_operator_has_no_exceedances() {
        let cfg = TailConfig::new(1.5, 100_000, geometric_grid(1.0, 10.0, 5), 1);
        let r = tail_experiment(&TailTarget::Operator(HSMatrix::zeros(2, 2)), &cfg).unwrap();
        assert!(r
            .table("tail")
            .unwrap()
            .column("p_hat")
            .unwrap()
            .iter()
            .all(|p| *p == 0.0));
        assert_eq!(r.overall(), Status::Pass);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let cfg = TailConfig::new(1.5, 10, geometric_grid(1.0, 10.0, 5), 1);
        assert!(tail_experiment(&TailTarget::Operator(HSMatrix::diagonal(1, 1, &[1.0])), &cfg).is_err());
    }

    #[test]
    fn unresolved_tail_is_inconclusive() {
        let cfg = TailConfig::new(1.5, 100_000, geometric_grid(100.0, 10_000.0, 5), 2);
        let r = tail_experiment(&TailTarget::Operator(HSMatrix::diagonal(1, 1, &[1.0])), &cfg).unwrap();
        assert_eq!(r.overall(), Status::Inconclusive);
    }

    #[test]
    fn integrand_samples_are_sups() {
        let grid = uniform_grid(1.0, 4);
        let s = StepIntegrand::constant(grid, HSMatrix::diagonal(1, 1, &[1.0])).unwrap();
        let sup = tail_samples(&TailTarget::Integrand(s.clone()), 1.5, 1.0, 10, 3).unwrap();
        let twice = tail_samples(&TailTarget::Integrand(s.scaled(2.0)), 1.5, 1.0, 10, 3).unwrap();
        for (a, b) in sup.iter().zip(&twice) {
            assert_eq!(2.0 * a, *b);
        }
    }
}
