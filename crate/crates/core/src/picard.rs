//! Discrete mild solutions of `dX = (AX + F(X)) dt + G(X) dL` for a
//! [`DiagonalModel`], by Picard iteration on a fixed grid.
//!
//! Both convolutions use the left-endpoint rule with exact semigroup factors:
//!
//! ```text
//! X(t_k) = S(t_k) x₀ + Σ_{i<k} S(t_k - t_i) F(X(t_i)) Δt_i
//!                    + Σ_{i<k} S(t_k - t_i) G(X(t_i)) ΔL_i
//! ```
//!
//! `X(t_k)` depends on the previous iterate only at `t_i < t_k`, so on a grid
//! with `M` steps the iteration is exact after at most `M + 1` sweeps.

use std::io::Write;

use crate::constants::{c3_and_tmax, HorizonBounds};
use crate::csv::{join_reals, parse_real, real};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{norm, DiagonalModel};
use crate::integral::StateSource;
use crate::rng::{derive_seed, domain};
use crate::sampling::{generate_noise_path, uniform_grid, NoisePath};

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub horizon: f64,
    pub steps: usize,
    pub n: usize,
    pub m: usize,
    pub n_max: usize,
    pub tol: f64,
    pub seed: u64,
    pub alpha: f64,
    /// `None` selects `x₀,k = 1/k`.
    pub x0: Option<Vec<f64>>,
    /// Constant `c` of the stable moment bound used for the horizon check.
    pub c_convention: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: 0.05,
            steps: 200,
            n: 8,
            m: 8,
            n_max: 100,
            tol: 1e-12,
            seed: 0,
            alpha: 1.5,
            x0: None,
            c_convention: 1.0,
        }
    }
}

/// Keys accepted by [`SolverConfig::set`].
pub const SOLVER_KEYS: [&str; 10] = ["T", "M", "n", "m", "N_max", "tol", "seed", "alpha", "x0", "c"];

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("T", "horizon must be positive"));
        }
        if self.steps == 0 || self.n == 0 || self.m == 0 || self.n_max == 0 {
            return Err(invalid("M, n, m, N_max", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        crate::error::check_alpha(self.alpha, 0.0, 2.0)?;
        if let Some(x) = &self.x0 {
            if x.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: x.len(),
                });
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.x0
            .clone()
            .unwrap_or_else(|| (1..=self.n).map(|k| 1.0 / k as f64).collect())
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.steps)
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("{key}: `{v}`")))
        };
        match key {
            "T" => self.horizon = parse_real(value)?,
            "M" => self.steps = int(value)?,
            "n" => self.n = int(value)?,
            "m" => self.m = int(value)?,
            "N_max" => self.n_max = int(value)?,
            "tol" => self.tol = parse_real(value)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("seed: `{value}`")))?
            }
            "alpha" => self.alpha = parse_real(value)?,
            "c" => self.c_convention = parse_real(value)?,
            "x0" => {
                self.x0 = Some(value.split(',').map(parse_real).collect::<Result<_>>()?);
            }
            other => return Err(Error::Parse(format!("unknown solver key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{line}`")))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = format!(
            "T={}\nM={}\nn={}\nm={}\nN_max={}\ntol={}\nseed={}\nalpha={}\nc={}\n",
            self.horizon, self.steps, self.n, self.m, self.n_max, self.tol, self.seed, self.alpha, self.c_convention
        );
        if let Some(x) = &self.x0 {
            let v: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("x0={}\n", v.join(",")));
        }
        s
    }
}

/// Discrete trajectory with Picard diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MildPath {
    grid: Vec<f64>,
    n: usize,
    states: Vec<f64>,
    pub iteration_count: usize,
    pub final_picard_gap: f64,
    pub residual: f64,
    /// `sup_k ‖X_j(t_k) - X_{j-1}(t_k)‖` for `j = 1..=iteration_count`.
    pub gaps: Vec<f64>,
}

impl MildPath {
    fn from_states(grid: Vec<f64>, n: usize, states: Vec<f64>) -> Self {
        Self {
            grid,
            n,
            states,
            iteration_count: 0,
            final_picard_gap: 0.0,
            residual: 0.0,
            gaps: Vec::new(),
        }
    }

    /// `X(t) = S(t) x₀` on the grid.
    pub fn flow(model: &DiagonalModel, grid: &[f64], x0: &[f64]) -> Self {
        let mut states = Vec::with_capacity(grid.len() * x0.len());
        for &t in grid {
            states.extend(model.lambdas().iter().zip(x0).map(|(l, x)| (-l * t).exp() * x));
        }
        // X(t₀) is x₀ itself, also when t₀ ≠ 0
        states[..x0.len()].copy_from_slice(x0);
        Self::from_states(grid.to_vec(), x0.len(), states)
    }

    /// `X ≡ 0` except `X(t₀) = x₀`.
    pub fn zero(grid: &[f64], x0: &[f64]) -> Self {
        let mut states = vec![0.0; grid.len() * x0.len()];
        states[..x0.len()].copy_from_slice(x0);
        Self::from_states(grid.to_vec(), x0.len(), states)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.states[k * self.n..(k + 1) * self.n]
    }

    pub fn initial(&self) -> &[f64] {
        self.at(0)
    }

    pub fn terminal(&self) -> &[f64] {
        self.at(self.grid.len() - 1)
    }

    /// `sup_k ‖self(t_k) - other(t_k)‖`.
    pub fn sup_distance(&self, other: &MildPath) -> f64 {
        self.states
            .chunks_exact(self.n)
            .zip(other.states.chunks_exact(other.n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Copy with state `k` shifted by `delta` in coordinate `j`.
    pub fn perturbed(&self, k: usize, j: usize, delta: f64) -> Self {
        let mut p = self.clone();
        p.states[k * self.n + j] += delta;
        p
    }

    /// `t,x_1..x_n,iteration_count,gap,residual`; state rows leave the last
    /// three fields empty, the trailer line leaves the state fields empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let xs: Vec<String> = (1..=self.n).map(|j| format!("x_{j}")).collect();
        writeln!(w, "t,{},iteration_count,gap,residual", xs.join(","))?;
        for (k, t) in self.grid.iter().enumerate() {
            writeln!(w, "{},{},,,", real(*t), join_reals(self.at(k)))?;
        }
        writeln!(
            w,
            "{},{},{},{}",
            ",".repeat(self.n),
            self.iteration_count,
            real(self.final_picard_gap),
            real(self.residual)
        )?;
        Ok(())
    }
}

impl StateSource for MildPath {
    fn times(&self) -> &[f64] {
        &self.grid
    }

    fn state(&self, k: usize) -> &[f64] {
        self.at(k)
    }
}

/// Exact factors `exp(-λ_j (t_k - t_i))` for all `i < k`.
struct Kernel {
    n: usize,
    table: Vec<f64>,
}

impl Kernel {
    fn new(model: &DiagonalModel, grid: &[f64]) -> Self {
        let n = model.n();
        let m = grid.len();
        let mut table = Vec::with_capacity(n * m * (m - 1) / 2);
        for k in 1..m {
            for i in 0..k {
                let d = grid[k] - grid[i];
                table.extend(model.lambdas().iter().map(|l| (-l * d).exp()));
            }
        }
        Self { n, table }
    }

    #[inline]
    fn row(&self, k: usize, i: usize) -> &[f64] {
        let off = (k * (k - 1) / 2 + i) * self.n;
        &self.table[off..off + self.n]
    }
}

fn check_grid(path: &MildPath, noise: &NoisePath) -> Result<()> {
    if path.grid != noise.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `Σ_{i<k} S(t_k - t_i) F(X(t_i)) Δt_i`.
pub fn drift_convolution(model: &DiagonalModel, path: &MildPath, k: usize) -> Vec<f64> {
    let g = &path.grid;
    let mut acc = vec![0.0; model.n()];
    for i in 0..k {
        let f = model.drift(path.at(i));
        let dt = g[i + 1] - g[i];
        for (j, a) in acc.iter_mut().enumerate() {
            *a += (-model.lambdas()[j] * (g[k] - g[i])).exp() * f[j] * dt;
        }
    }
    acc
}

/// Right-hand side of the mild equation evaluated at `prev`.
fn apply_rhs(model: &DiagonalModel, kernel: &Kernel, prev: &MildPath, noise: &NoisePath) -> MildPath {
    let n = model.n();
    let d = model.kappa().len();
    let grid = &prev.grid;
    let steps = grid.len() - 1;
    let drifts: Vec<Vec<f64>> = (0..steps).map(|i| model.drift(prev.at(i))).collect();
    let diffs: Vec<Vec<f64>> = (0..steps).map(|i| model.diffusion_diagonal(prev.at(i))).collect();
    let x0 = prev.at(0);
    let mut states = vec![0.0; grid.len() * n];
    states[..n].copy_from_slice(x0);
    for k in 1..grid.len() {
        let out = &mut states[k * n..(k + 1) * n];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (-model.lambdas()[j] * (grid[k] - grid[0])).exp() * x0[j];
        }
        for i in 0..k {
            let e = kernel.row(k, i);
            let dt = grid[i + 1] - grid[i];
            let inc = noise.increment(i);
            for j in 0..n {
                let mut v = drifts[i][j] * dt;
                if j < d {
                    v += diffs[i][j] * inc[j];
                }
                out[j] += e[j] * v;
            }
        }
    }
    MildPath::from_states(grid.clone(), n, states)
}

/// One Picard sweep `X_new = RHS(prev)`.
pub fn picard_step(model: &DiagonalModel, prev: &MildPath, noise: &NoisePath) -> Result<MildPath> {
    check_grid(prev, noise)?;
    check_dims(model, prev, noise)?;
    Ok(apply_rhs(model, &Kernel::new(model, &prev.grid), prev, noise))
}

fn check_dims(model: &DiagonalModel, path: &MildPath, noise: &NoisePath) -> Result<()> {
    if path.n != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: path.n,
        });
    }
    if noise.dim() != model.m() {
        return Err(Error::DimensionMismatch {
            expected: model.m(),
            found: noise.dim(),
        });
    }
    Ok(())
}

/// `sup_k ‖X(t_k) - RHS(X)(t_k)‖`.
pub fn residual(model: &DiagonalModel, path: &MildPath, noise: &NoisePath) -> Result<f64> {
    let next = picard_step(model, path, noise)?;
    Ok(next.sup_distance(path))
}

/// First iterate of the Picard scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStart {
    /// `X₀(t) = S(t) x₀`.
    Flow,
    /// `X₀ ≡ 0` off `t₀`.
    Zero,
}

/// Iterates of one Picard run.
#[derive(Debug, Clone)]
pub struct PicardTrace {
    /// `‖X_j(T) - X_{j-1}(T)‖`, `j = 1..`.
    pub terminal_diffs: Vec<f64>,
    /// `sup_k ‖X_j(t_k) - X_{j-1}(t_k)‖`.
    pub sup_gaps: Vec<f64>,
    pub last: MildPath,
}

/// Exactly `iterations` sweeps from `start`.
pub fn picard_trace(
    model: &DiagonalModel,
    x0: &[f64],
    noise: &NoisePath,
    start: PicardStart,
    iterations: usize,
) -> Result<PicardTrace> {
    let grid = noise.grid();
    let mut prev = match start {
        PicardStart::Flow => MildPath::flow(model, grid, x0),
        PicardStart::Zero => MildPath::zero(grid, x0),
    };
    check_dims(model, &prev, noise)?;
    let kernel = Kernel::new(model, grid);
    let mut terminal_diffs = Vec::with_capacity(iterations);
    let mut sup_gaps = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let next = apply_rhs(model, &kernel, &prev, noise);
        terminal_diffs.push(norm(
            &next
                .terminal()
                .iter()
                .zip(prev.terminal())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        ));
        sup_gaps.push(next.sup_distance(&prev));
        prev = next;
    }
    Ok(PicardTrace {
        terminal_diffs,
        sup_gaps,
        last: prev,
    })
}

/// Iterate until the sup gap drops below `tol` or `n_max` sweeps are done.
pub fn solve_with_noise(
    model: &DiagonalModel,
    x0: &[f64],
    noise: &NoisePath,
    tol: f64,
    n_max: usize,
    start: PicardStart,
) -> Result<MildPath> {
    let grid = noise.grid();
    if x0.len() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: x0.len(),
        });
    }
    let mut prev = match start {
        PicardStart::Flow => MildPath::flow(model, grid, x0),
        PicardStart::Zero => MildPath::zero(grid, x0),
    };
    check_dims(model, &prev, noise)?;
    let kernel = Kernel::new(model, grid);
    let mut gaps = Vec::new();
    loop {
        let next = apply_rhs(model, &kernel, &prev, noise);
        let gap = next.sup_distance(&prev);
        gaps.push(gap);
        prev = next;
        if gap < tol {
            break;
        }
        if gaps.len() >= n_max {
            return Err(Error::NonConvergence {
                iterations: gaps.len(),
                gap,
                tol,
            });
        }
    }
    let res = apply_rhs(model, &kernel, &prev, noise).sup_distance(&prev);
    prev.iteration_count = gaps.len();
    prev.final_picard_gap = *gaps.last().unwrap_or(&0.0);
    prev.residual = res;
    prev.gaps = gaps;
    Ok(prev)
}

/// Binding horizon bound for the model's Hölder constants, when `1 < α < 2`.
pub fn horizon_bounds(model: &DiagonalModel, alpha: f64, c_convention: f64) -> Result<Option<HorizonBounds>> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Ok(None);
    }
    let (c_f, c_g) = model.holder_constants();
    c3_and_tmax(alpha, c_f, c_g, c_convention).map(Some)
}

fn check_model(model: &DiagonalModel, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    if model.n() != config.n || model.m() != config.m {
        return Err(Error::DimensionMismatch {
            expected: config.n * config.m,
            found: model.n() * model.m(),
        });
    }
    Ok(())
}

/// Generate the noise from `config.seed` and solve from `S(t)x₀`.
pub fn solve(model: &DiagonalModel, config: &SolverConfig) -> Result<MildPath> {
    check_model(model, config)?;
    if let Some(b) = horizon_bounds(model, config.alpha, config.c_convention)? {
        if config.horizon > b.binding {
            log::warn!(
                "T = {} exceeds the admissible horizon {} (c3 = {}); convergence is not guaranteed",
                config.horizon,
                b.binding,
                b.c3
            );
        }
    }
    let noise = generate_noise_path(config.alpha, config.m, &config.grid(), config.seed)?;
    solve_with_noise(
        model,
        &config.initial_state(),
        &noise,
        config.tol,
        config.n_max,
        PicardStart::Flow,
    )
}

/// Result of [`glue_solve`].
#[derive(Debug, Clone)]
pub struct GluedPath {
    /// Concatenation on the global grid; junction points appear once.
    pub path: MildPath,
    /// Each piece on its own local grid `[0, T_total/pieces]`.
    pub pieces: Vec<MildPath>,
    pub piece_length: f64,
    pub bound: f64,
}

/// Number of equal pieces, each of length `< 0.99 · bound`.
pub fn glue_piece_count(total: f64, bound: f64) -> usize {
    ((total / (0.99 * bound)).ceil() as usize).max(1)
}

/// Solve on `[0, T]` by consecutive pieces shorter than the binding bound,
/// each started from the previous terminal state. Piece `0` uses
/// `config.seed`; piece `k` uses a seed derived from it.
pub fn glue_solve(model: &DiagonalModel, config: &SolverConfig) -> Result<GluedPath> {
    check_model(model, config)?;
    let bound = horizon_bounds(model, config.alpha, config.c_convention)?
        .map(|b| b.binding)
        .ok_or_else(|| invalid("alpha", "gluing needs 1 < alpha < 2 for the horizon bound"))?;
    let pieces = glue_piece_count(config.horizon, bound);
    let len = config.horizon / pieces as f64;
    let local = uniform_grid(len, config.steps);
    let mut x0 = config.initial_state();
    let mut out = Vec::with_capacity(pieces);
    for k in 0..pieces {
        let seed = if k == 0 {
            config.seed
        } else {
            derive_seed(config.seed, &[domain::GLUE_PIECE, k as u64])
        };
        let noise = generate_noise_path(config.alpha, config.m, &local, seed)?;
        let piece = solve_with_noise(model, &x0, &noise, config.tol, config.n_max, PicardStart::Flow).map_err(|e| {
            Error::PieceFailed {
                piece: k,
                source: Box::new(e),
            }
        })?;
        x0 = piece.terminal().to_vec();
        out.push(piece);
    }

    let n = model.n();
    let mut grid = Vec::with_capacity(pieces * config.steps + 1);
    let mut states = Vec::with_capacity(grid.capacity() * n);
    for (k, p) in out.iter().enumerate() {
        let skip = usize::from(k > 0);
        let offset = k as f64 * len;
        grid.extend(local[skip..].iter().map(|t| offset + t));
        states.extend_from_slice(&p.states[skip * n..]);
    }
    if let Some(last) = grid.last_mut() {
        *last = config.horizon;
    }
    let mut path = MildPath::from_states(grid, n, states);
    path.iteration_count = out.iter().map(|p| p.iteration_count).max().unwrap_or(0);
    path.final_picard_gap = out.iter().map(|p| p.final_picard_gap).fold(0.0, f64::max);
    path.residual = out.iter().map(|p| p.residual).fold(0.0, f64::max);
    path.gaps = out.iter().flat_map(|p| p.gaps.iter().copied()).collect();
    Ok(GluedPath {
        path,
        pieces: out,
        piece_length: len,
        bound,
    })
}
