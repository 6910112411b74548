use std::time::Instant;

use crate::constants::chain_constants;
use crate::error::{check_alpha, Error, Result};
use crate::experiments::report::{ExperimentReport, Table, Verdict};
use crate::experiments::tail::{tail_samples, TailTarget};
use crate::integral::StepIntegrand;
use crate::stats;

#[derive(Debug, Clone)]
pub struct MomentConfig {
    pub alpha: f64,
    pub p_list: Vec<f64>,
    /// `N`; the stability check compares `N` against the nested `2N` set.
    pub samples: usize,
    pub seed: u64,
    /// Rescaling factor for the homogeneity check; a power of two keeps
    /// every floating-point operation exact.
    pub scale: f64,
    pub stability_tol: f64,
    /// `p > α - margin` is flagged instead of checked for stability.
    pub margin: f64,
    pub bootstrap_resamples: usize,
}

impl MomentConfig {
    pub fn new(alpha: f64, p_list: Vec<f64>, samples: usize, seed: u64) -> Self {
        Self {
            alpha,
            p_list,
            samples,
            seed,
            scale: 2.0,
            stability_tol: 0.2,
            margin: 0.3,
            bootstrap_resamples: 200,
        }
    }
}

/// `D = h_max (Σ Δt (h_i/h_max)^α)^{1/α} = (∫ ‖Ψ‖_HS^α ds)^{1/α}`, computed
/// so that rescaling `Ψ` by a power of two rescales `D` exactly.
pub fn energy_scale(integrand: &StepIntegrand, alpha: f64) -> f64 {
    let h: Vec<f64> = integrand.values().iter().map(|v| v.hs_norm()).collect();
    let hmax = h.iter().copied().fold(0.0, f64::max);
    if hmax == 0.0 {
        return 0.0;
    }
    let s: f64 = h
        .iter()
        .zip(integrand.grid().windows(2))
        .map(|(hi, w)| (w[1] - w[0]) * (hi / hmax).powf(alpha))
        .sum();
    hmax * s.powf(1.0 / alpha)
}

fn moment(xs: &[f64], p: f64) -> f64 {
    xs.iter().map(|x| x.powf(p)).sum::<f64>() / xs.len() as f64
}

/// Estimates of `E[sup_k ‖I(t_k)‖^p]` with stability, homogeneity and the
/// normalized ratio against `C_{α,p}` at `c = 1`.
pub fn moment_experiment(integrand: &StepIntegrand, config: &MomentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let a = config.alpha;
    check_alpha(a, 0.0, 2.0)?;
    if let Some(&p) = config.p_list.iter().find(|p| !(**p > 0.0 && **p < a)) {
        return Err(Error::MomentOrder { p, alpha: a });
    }
    if config.samples < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: config.samples,
        });
    }
    let n = config.samples;
    let target = TailTarget::Integrand(integrand.clone());
    let sups = tail_samples(&target, a, 1.0, 2 * n, config.seed)?;
    let scaled_target = TailTarget::Integrand(integrand.scaled(config.scale));
    let sups_scaled = tail_samples(&scaled_target, a, 1.0, 2 * n, config.seed)?;
    let sup_exact = sups.iter().zip(&sups_scaled).all(|(x, y)| config.scale * x == *y);

    let d = energy_scale(integrand, a);
    let d_scaled = energy_scale(&integrand.scaled(config.scale), a);

    let mut report = ExperimentReport::new("moment");
    report
        .param("alpha", a)
        .param("N", n)
        .param("scale", config.scale)
        .param("energy", d.powf(a));
    report.seeds.push(config.seed);
    report.verdicts.push(Verdict::check(
        "homogeneity_sup",
        sup_exact,
        f64::from(u8::from(sup_exact)),
        format!("sup(scale*Psi) == scale*sup(Psi) bit-exactly for all {} samples", 2 * n),
    ));

    let mut table = Table::new(
        "moments",
        &[
            "p",
            "m_N",
            "m_2N",
            "ci_lo",
            "ci_hi",
            "ratio",
            "ratio_scaled",
            "C_alpha_p",
        ],
    );
    let mut ratios_exact = true;
    for (idx, &p) in config.p_list.iter().enumerate() {
        let m1 = moment(&sups[..n], p);
        let m2 = moment(&sups, p);
        let powered: Vec<f64> = sups.iter().map(|x| x.powf(p)).collect();
        let (lo, hi) = stats::bootstrap_mean_ci(
            &powered,
            config.bootstrap_resamples,
            0.95,
            crate::rng::derive_seed(config.seed, &[crate::rng::domain::BOOTSTRAP, idx as u64]),
        );
        let (ratio, ratio_scaled) = if d > 0.0 {
            let r: Vec<f64> = sups.iter().map(|x| x / d).collect();
            let rs: Vec<f64> = sups_scaled.iter().map(|x| x / d_scaled).collect();
            (moment(&r, p), moment(&rs, p))
        } else {
            (0.0, 0.0)
        };
        ratios_exact &= ratio.to_bits() == ratio_scaled.to_bits();
        let cap_c = chain_constants(a, p, 1.0)?.cap_c;
        table.push(vec![p, m1, m2, lo, hi, ratio, ratio_scaled, cap_c]);

        let rel = if m1 == 0.0 && m2 == 0.0 {
            0.0
        } else {
            (m2 / m1 - 1.0).abs()
        };
        let name = format!("stability_p{p}");
        if p <= a - config.margin + 1e-12 {
            report.verdicts.push(Verdict::check(
                &name,
                rel < config.stability_tol,
                rel,
                format!("|m_2N/m_N - 1| < {}", config.stability_tol),
            ));
        } else {
            report.verdicts.push(Verdict::info(
                &name,
                rel,
                format!(
                    "p > alpha - {}: slow Monte-Carlo convergence, not checked",
                    config.margin
                ),
            ));
        }
        report.verdicts.push(Verdict::info(
            &format!("ratio_p{p}"),
            ratio,
            format!(
                "E sup^p / energy^(p/alpha) against C_alpha_p(c=1) = {}",
                crate::csv::real(cap_c)
            ),
        ));
    }
    report.verdicts.push(Verdict::check(
        "homogeneity_ratio",
        ratios_exact,
        f64::from(u8::from(ratios_exact)),
        "normalized ratio unchanged bit-exactly under rescaling",
    ));
    report.tables.push(table);
    report.runtime = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::report::Status;
    use crate::hilbert::HSMatrix;
    use crate::sampling::uniform_grid;

    #[test]
    fn zero_integrand_has_zero_moments() {
        let s = StepIntegrand::constant(uniform_grid(1.0, 4), HSMatrix::zeros(2, 2)).unwrap();
        let r = moment_experiment(&s, &MomentConfig::new(1.5, vec![1.0], 1000, 1)).unwrap();
        let t = r.table("moments").unwrap();
        assert_eq!(t.rows[0][1], 0.0);
        assert_eq!(r.overall(), Status::Pass);
    }

    #[test]
    fn ratio_is_scale_free() {
        let vals: Vec<HSMatrix> = (0..5)
            .map(|i| HSMatrix::from_row_major(2, 2, vec![1.0 + i as f64, 0.3, -0.2, 0.7]).unwrap())
            .collect();
        let s = StepIntegrand::new(uniform_grid(0.5, 5), vals).unwrap();
        let r = moment_experiment(&s, &MomentConfig::new(1.5, vec![0.5, 1.0], 2000, 4)).unwrap();
        assert!(r.verdict("homogeneity_sup").unwrap().passed());
        assert!(r.verdict("homogeneity_ratio").unwrap().passed());
        assert!(moment_experiment(&s, &MomentConfig::new(1.5, vec![1.5], 100, 4)).is_err());
    }
}
