//! Stochastic integrals of step integrands against truncated cylindrical
//! noise.
//!
//! A [`StepIntegrand`] holds one Hilbert–Schmidt matrix `Ψ_i` per grid step
//! `(t_i, t_{i+1}]`; the integral path is the partial sum
//! `I(t_k) = Σ_{i<k} Ψ_i ΔL_i`.

use std::io::Write;

use rayon::prelude::*;

use crate::csv::{join_reals, real};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{norm, HSMatrix};
use crate::rng::{derive_seed, domain};
use crate::sampling::{generate_noise_path, uniform_grid, validate_grid, NoisePath};
use crate::stats;

/// `ψ(L)` in the truncated bases: the matrix–vector product `ψ v`.
pub fn radonify(psi: &HSMatrix, increment: &[f64]) -> Result<Vec<f64>> {
    psi.apply(increment)
}

/// Piecewise-constant predictable integrand on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepIntegrand {
    grid: Vec<f64>,
    values: Vec<HSMatrix>,
}

impl StepIntegrand {
    /// `values[i]` acts on `(grid[i], grid[i+1]]`.
    pub fn new(grid: Vec<f64>, values: Vec<HSMatrix>) -> Result<Self> {
        validate_grid(&grid)?;
        if values.len() != grid.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: grid.len() - 1,
                found: values.len(),
            });
        }
        let (r, c) = (values[0].rows(), values[0].cols());
        if values.iter().any(|v| v.rows() != r || v.cols() != c) {
            return Err(invalid("values", "all steps must share one shape"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Vec<f64>, psi: HSMatrix) -> Result<Self> {
        let steps = grid.len().saturating_sub(1);
        Self::new(grid, vec![psi; steps.max(1)])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[HSMatrix] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    /// `(n, m)` of every step.
    pub fn shape(&self) -> (usize, usize) {
        (self.values[0].rows(), self.values[0].cols())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.scaled(c)).collect(),
        }
    }

    /// `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: f64, other: &StepIntegrand, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x.combine(a, y, b))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `Ψ 1_{[0, t_k]}`: steps from `k` on are set to zero.
    pub fn stopped(&self, k: usize) -> Self {
        let mut out = self.clone();
        let (r, c) = self.shape();
        for v in out.values.iter_mut().skip(k) {
            *v = HSMatrix::zeros(r, c);
        }
        out
    }

    /// `∫₀^T ‖Ψ(s)‖_HS^α ds`.
    pub fn alpha_energy(&self, alpha: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.windows(2))
            .map(|(v, w)| (w[1] - w[0]) * v.hs_norm().powf(alpha))
            .sum()
    }
}

/// `I(t_k)` for every grid point, `I(t₀) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralPath {
    grid: Vec<f64>,
    dim: usize,
    values: Vec<f64>,
}

impl IntegralPath {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.at(self.grid.len() - 1)
    }

    /// `max_k ‖I(t_k)‖`.
    pub fn sup_norm(&self) -> f64 {
        self.values.chunks_exact(self.dim).map(norm).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (1..=self.dim).map(|j| format!("coord_{j}")).collect();
        writeln!(w, "t,{}", cols.join(","))?;
        for (k, t) in self.grid.iter().enumerate() {
            writeln!(w, "{},{}", real(*t), join_reals(self.at(k)))?;
        }
        Ok(())
    }
}

/// Partial sums `Σ_{i<k} Ψ_i ΔL_i` on the common grid.
pub fn integrate(integrand: &StepIntegrand, noise: &NoisePath) -> Result<IntegralPath> {
    if integrand.grid != noise.grid() {
        return Err(Error::GridMismatch);
    }
    let (n, m) = integrand.shape();
    if m != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: noise.dim(),
        });
    }
    let mut values = vec![0.0; n * integrand.grid.len()];
    let mut acc = vec![0.0; n];
    let mut term = vec![0.0; n];
    for (i, (psi, inc)) in integrand.values.iter().zip(noise.rows()).enumerate() {
        psi.apply_into(inc, &mut term);
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
        values[(i + 1) * n..(i + 2) * n].copy_from_slice(&acc);
    }
    Ok(IntegralPath {
        grid: integrand.grid.clone(),
        dim: n,
        values,
    })
}

/// A trajectory whose states can feed a predictable integrand.
pub trait StateSource {
    fn times(&self) -> &[f64];
    fn state(&self, k: usize) -> &[f64];
}

impl StateSource for IntegralPath {
    fn times(&self) -> &[f64] {
        &self.grid
    }

    fn state(&self, k: usize) -> &[f64] {
        self.at(k)
    }
}

/// Read access to a [`StateSource`] limited to times `≤ t_i`.
pub struct CausalView<'a> {
    source: &'a dyn StateSource,
    step: usize,
    time: f64,
    last: usize,
}

impl CausalView<'_> {
    /// Index of the integrand step being built.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Left endpoint `t_i`.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// State at the left endpoint.
    pub fn current(&self) -> &[f64] {
        self.source.state(self.last)
    }

    /// State at source index `k`; refused for times after `t_i`.
    pub fn state(&self, k: usize) -> Result<&[f64]> {
        if k > self.last {
            return Err(Error::NotAdapted {
                step: self.step,
                requested: k,
            });
        }
        Ok(self.source.state(k))
    }

    /// Source index of the left endpoint.
    pub fn index(&self) -> usize {
        self.last
    }
}

/// `Ψ_i = rule(state up to t_i)`. Every left endpoint of `grid` must be a
/// time of `source`.
pub fn discretize_predictable<F>(rule: F, source: &dyn StateSource, grid: &[f64]) -> Result<StepIntegrand>
where
    F: Fn(&CausalView<'_>) -> Result<HSMatrix>,
{
    validate_grid(grid)?;
    let times = source.times();
    let mut values = Vec::with_capacity(grid.len() - 1);
    for (i, &t) in grid[..grid.len() - 1].iter().enumerate() {
        let last = times
            .binary_search_by(|s| s.total_cmp(&t))
            .map_err(|_| Error::GridMismatch)?;
        let view = CausalView {
            source,
            step: i,
            time: t,
            last,
        };
        values.push(rule(&view)?);
    }
    StepIntegrand::new(grid.to_vec(), values)
}

/// Parameters of [`refinement_experiment`].
#[derive(Debug, Clone)]
pub struct RefinementConfig {
    pub alpha: f64,
    pub horizon: f64,
    /// Steps of the coarsest level.
    pub base_steps: usize,
    /// Number of reported levels; the reference level is one finer.
    pub levels: usize,
    pub replicas: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub level: usize,
    pub epsilon: f64,
    pub exceedance: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    /// `(∫ ‖Ψ_k - Ψ‖_HS^α ds)^{1/α}` on a fine quadrature, per level.
    pub lalpha_distance: Vec<f64>,
}

impl RefinementTable {
    /// Exceedances nonincreasing in the level for every `ε`, up to
    /// `tolerance_se` combined standard errors.
    pub fn is_monotone(&self, tolerance_se: f64) -> bool {
        let mut eps: Vec<f64> = self.rows.iter().map(|r| r.epsilon).collect();
        eps.dedup();
        eps.iter().all(|&e| {
            let col: Vec<&RefinementRow> = self.rows.iter().filter(|r| r.epsilon == e).collect();
            col.windows(2).all(|w| {
                let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
                w[1].exceedance <= w[0].exceedance + tolerance_se * se
            })
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,epsilon,exceedance,stderr")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.level,
                real(r.epsilon),
                real(r.exceedance),
                real(r.stderr)
            )?;
        }
        Ok(())
    }
}

/// For `Ψ_k` sampled at the left endpoints of `base_steps·2^k` cells, estimate
/// `P(‖∫Ψ_k dL - ∫Ψ_K dL‖ > ε)` against the reference level `K = levels`.
/// The noise is drawn once on the reference grid per replica.
pub fn refinement_experiment<F>(target: F, config: &RefinementConfig) -> Result<RefinementTable>
where
    F: Fn(f64) -> HSMatrix + Sync,
{
    if config.levels == 0 || config.base_steps == 0 {
        return Err(invalid("levels", "need at least one level and one step"));
    }
    if config.replicas < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: config.replicas,
        });
    }
    let k_ref = config.levels;
    let fine_steps = config.base_steps << k_ref;
    let fine = uniform_grid(config.horizon, fine_steps);
    let probe = target(0.0);
    let (n, m) = (probe.rows(), probe.cols());

    // per level and fine step, the integrand value
    let level_values: Vec<Vec<HSMatrix>> = (0..=k_ref)
        .map(|k| {
            let coarse = uniform_grid(config.horizon, config.base_steps << k);
            let ratio = 1usize << (k_ref - k);
            let per_cell: Vec<HSMatrix> = coarse[..coarse.len() - 1].iter().map(|&t| target(t)).collect();
            (0..fine_steps).map(|j| per_cell[j / ratio].clone()).collect()
        })
        .collect();

    let diffs: Vec<Vec<f64>> = (0..config.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let seed = derive_seed(config.seed, &[domain::REPLICA, r as u64]);
            let noise = generate_noise_path(config.alpha, m, &fine, seed)?;
            let terminal: Vec<Vec<f64>> = level_values
                .iter()
                .map(|vals| {
                    let mut acc = vec![0.0; n];
                    let mut term = vec![0.0; n];
                    for (psi, inc) in vals.iter().zip(noise.rows()) {
                        psi.apply_into(inc, &mut term);
                        for (a, t) in acc.iter_mut().zip(&term) {
                            *a += t;
                        }
                    }
                    acc
                })
                .collect();
            let reference = &terminal[k_ref];
            Ok(terminal[..k_ref]
                .iter()
                .map(|v| norm(&v.iter().zip(reference).map(|(a, b)| a - b).collect::<Vec<_>>()))
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for level in 0..k_ref {
        for &eps in &config.epsilons {
            let hits = diffs.iter().filter(|d| d[level] > eps).count();
            let p = hits as f64 / config.replicas as f64;
            rows.push(RefinementRow {
                level,
                epsilon: eps,
                exceedance: p,
                stderr: stats::binomial_se(p, config.replicas),
            });
        }
    }

    let quad = 64;
    let lalpha_distance = (0..k_ref)
        .map(|k| {
            let coarse = uniform_grid(config.horizon, config.base_steps << k);
            let mut s = 0.0;
            for w in coarse.windows(2) {
                let left = target(w[0]);
                let h = (w[1] - w[0]) / quad as f64;
                for q in 0..quad {
                    let t = w[0] + (q as f64 + 0.5) * h;
                    let d = left.combine(1.0, &target(t), -1.0).map(|d| d.hs_norm()).unwrap_or(0.0);
                    s += h * d.powf(config.alpha);
                }
            }
            s.powf(1.0 / config.alpha)
        })
        .collect();

    Ok(RefinementTable { rows, lalpha_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e11(n: usize, m: usize, c: f64) -> HSMatrix {
        HSMatrix::rank_one(n, m, 0, 0, c)
    }

    #[test]
    fn radonify_examples() {
        assert_eq!(
            radonify(&HSMatrix::zeros(2, 3), &[1.0, 2.0, 3.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(radonify(&e11(2, 3, 1.0), &[4.0, 2.0, 3.0]).unwrap(), vec![4.0, 0.0]);
        assert!(matches!(
            radonify(&e11(2, 3, 1.0), &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn integrate_zero_and_constant() {
        let grid = uniform_grid(1.0, 8);
        let noise = generate_noise_path(1.5, 2, &grid, 5).unwrap();
        let zero = StepIntegrand::constant(grid.clone(), HSMatrix::zeros(3, 2)).unwrap();
        let p = integrate(&zero, &noise).unwrap();
        assert!(p.values.iter().all(|v| *v == 0.0));
        let one = StepIntegrand::constant(grid.clone(), e11(3, 2, 1.0)).unwrap();
        let p = integrate(&one, &noise).unwrap();
        assert_eq!(p.at(0), &[0.0, 0.0, 0.0]);
        assert_eq!(p.terminal()[0], noise.total()[0]);
        let other = generate_noise_path(1.5, 2, &uniform_grid(1.0, 4), 5).unwrap();
        assert!(matches!(integrate(&one, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn stopping_matches_partial_sum() {
        let grid = uniform_grid(2.0, 10);
        let noise = generate_noise_path(1.2, 2, &grid, 9).unwrap();
        let vals: Vec<HSMatrix> = (0..10)
            .map(|i| HSMatrix::from_row_major(2, 2, vec![1.0, i as f64, -0.5, 0.25 * i as f64]).unwrap())
            .collect();
        let psi = StepIntegrand::new(grid, vals).unwrap();
        let full = integrate(&psi, &noise).unwrap();
        for k in 0..=10 {
            let stopped = integrate(&psi.stopped(k), &noise).unwrap();
            assert_eq!(stopped.terminal(), full.at(k));
        }
    }

    #[test]
    fn discretize_left_endpoint_and_guard() {
        let grid = vec![0.0, 0.5, 1.0, 1.5];
        let noise = generate_noise_path(1.5, 1, &grid, 2).unwrap();
        let x = integrate(&StepIntegrand::constant(grid.clone(), e11(1, 1, 1.0)).unwrap(), &noise).unwrap();
        let rule = |v: &CausalView<'_>| Ok(e11(1, 1, 2.0 * v.current()[0] + v.time()));
        let psi = discretize_predictable(rule, &x, &grid).unwrap();
        for (i, v) in psi.values().iter().enumerate() {
            assert_eq!(v.get(0, 0), 2.0 * x.at(i)[0] + grid[i]);
        }
        let constant = discretize_predictable(|_| Ok(e11(1, 1, 3.0)), &x, &grid).unwrap();
        assert_eq!(constant, StepIntegrand::constant(grid.clone(), e11(1, 1, 3.0)).unwrap());
        let peek = |v: &CausalView<'_>| Ok(e11(1, 1, v.state(v.index() + 1)?[0]));
        assert!(matches!(
            discretize_predictable(peek, &x, &grid),
            Err(Error::NotAdapted { step: 0, requested: 1 })
        ));
    }

    #[test]
    fn refinement_exact_for_piecewise_constant() {
        let cfg = RefinementConfig {
            alpha: 1.5,
            horizon: 1.0,
            base_steps: 4,
            levels: 3,
            replicas: 200,
            epsilons: vec![1e-12],
            seed: 1,
        };
        let t = refinement_experiment(|s| e11(1, 1, (4.0 * s).floor() + 1.0), &cfg).unwrap();
        assert!(t.rows.iter().all(|r| r.exceedance == 0.0));
        assert!(t.lalpha_distance.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn refinement_linear_distance_halves() {
        let cfg = RefinementConfig {
            alpha: 1.5,
            horizon: 1.0,
            base_steps: 2,
            levels: 4,
            replicas: 500,
            epsilons: vec![0.05, 1e3],
            seed: 4,
        };
        let t = refinement_experiment(|s| e11(2, 2, s), &cfg).unwrap();
        for w in t.lalpha_distance.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-3, "{:?}", t.lalpha_distance);
        }
        assert!(t.rows.iter().filter(|r| r.epsilon == 1e3).all(|r| r.exceedance == 0.0));
        assert!(t.is_monotone(2.0));
    }
}
