//! Exact samplers for symmetric and isotropic α-stable laws and truncated
//! cylindrical noise paths.
//!
//! * [`SymmetricStable`] draws scalars with characteristic function
//!   `exp(-σ^α |u|^α)` by the trigonometric transform of a uniform angle and
//!   an exponential variable.
//! * [`PositiveStable`] draws totally skewed variables with Laplace transform
//!   `E[exp(-sA)] = exp(-s^β)`, `β ∈ (0,1)`.
//! * [`IsotropicStable`] uses the sub-Gaussian representation
//!   `X = sqrt(2A) G` with `A ~ PositiveStable(α/2)` and `G` standard normal,
//!   which gives `E[exp(i⟨u,X⟩)] = E[exp(-A|u|²)] = exp(-|u|^α)`.
//!
//! Because one subordinator draw is shared by all coordinates of a vector,
//! appending coordinates never changes the ones already drawn.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use rayon::prelude::*;

use crate::csv;
use crate::error::{check_alpha, invalid, Error, Result};
use crate::rng::{self, domain};

/// Stability index and scale of a symmetric stable law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    alpha: f64,
    scale: f64,
}

impl AlphaParams {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        check_alpha(alpha, 0.0, 2.0)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(Self { alpha, scale })
    }

    /// Unit scale.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Symmetric α-stable law with characteristic function `exp(-σ^α |u|^α)`.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricStable {
    params: AlphaParams,
}

impl SymmetricStable {
    pub fn new(params: AlphaParams) -> Self {
        Self { params }
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.params.alpha;
        let u: f64 = rng.sample(Open01);
        let v = PI * (u - 0.5);
        let x = if a == 1.0 {
            v.tan()
        } else {
            let w: f64 = rng.sample(Exp1);
            (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a)
        };
        self.params.scale * x
    }
}

/// Positive stable law with Laplace transform `exp(-s^β)`.
#[derive(Debug, Clone, Copy)]
pub struct PositiveStable {
    beta: f64,
}

impl PositiveStable {
    pub fn new(beta: f64) -> Result<Self> {
        check_alpha(beta, 0.0, 1.0)?;
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Distribution<f64> for PositiveStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Kanter's representation
        let b = self.beta;
        loop {
            let u: f64 = PI * rng.sample::<f64, _>(Open01);
            let w: f64 = rng.sample(Exp1);
            let a = (b * u).sin() / u.sin().powf(1.0 / b) * (((1.0 - b) * u).sin() / w).powf((1.0 - b) / b);
            // The transform can underflow to 0 for tiny β; the law itself is
            // strictly positive.
            if a > 0.0 && a.is_finite() {
                return a;
            }
        }
    }
}

/// Rotation-invariant α-stable vectors with characteristic function
/// `exp(-|u|^α)`.
#[derive(Debug, Clone, Copy)]
pub struct IsotropicStable {
    alpha: f64,
    dim: usize,
    subordinator: PositiveStable,
}

impl IsotropicStable {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha, 0.0, 2.0)?;
        if dim == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        Ok(Self {
            alpha,
            dim,
            subordinator: PositiveStable::new(alpha / 2.0)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Multiplier `sqrt(2A)` of the Gaussian coordinates.
    pub fn mixing_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (2.0 * self.subordinator.sample(rng)).sqrt()
    }

    /// Fill `out` (length `dim`) with one draw scaled by `factor`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, factor: f64, out: &mut [f64]) {
        let s = factor * self.mixing_scale(rng);
        for x in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x = s * g;
        }
    }
}

impl Distribution<Vec<f64>> for IsotropicStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.sample_into(rng, 1.0, &mut v);
        v
    }
}

/// One symmetric stable draw, deterministic in `seed`.
pub fn sample_scalar_sas(params: &AlphaParams, seed: u64) -> f64 {
    SymmetricStable::new(*params).sample(&mut rng::stream(seed, &[domain::SCALAR]))
}

/// One positive stable draw with Laplace transform `exp(-s^β)`.
pub fn sample_positive_stable(alpha_half: f64, seed: u64) -> Result<f64> {
    let law = PositiveStable::new(alpha_half)?;
    Ok(law.sample(&mut rng::stream(seed, &[domain::POSITIVE])))
}

/// One isotropic draw in dimension `n`.
pub fn sample_isotropic(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let law = IsotropicStable::new(alpha, n)?;
    Ok(law.sample(&mut rng::stream(seed, &[domain::ISOTROPIC])))
}

/// `count` independent symmetric stable draws.
pub fn draw_scalar_sas(params: &AlphaParams, count: usize, seed: u64) -> Vec<f64> {
    let law = SymmetricStable::new(*params);
    rng::par_draws(count, seed, domain::SCALAR, |r| law.sample(r))
}

/// `count` independent positive stable draws.
pub fn draw_positive_stable(alpha_half: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let law = PositiveStable::new(alpha_half)?;
    Ok(rng::par_draws(count, seed, domain::POSITIVE, |r| law.sample(r)))
}

/// `count` isotropic draws, flattened row-major (`count × n`).
pub fn draw_isotropic(alpha: f64, n: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    let law = IsotropicStable::new(alpha, n)?;
    let mut out = vec![0.0; count * n];
    out.par_chunks_mut(rng::CHUNK * n)
        .enumerate()
        .for_each(|(block, slot)| {
            let mut r = rng::stream(seed, &[domain::ISOTROPIC, block as u64]);
            for row in slot.chunks_exact_mut(n) {
                law.sample_into(&mut r, 1.0, row);
            }
        });
    Ok(out)
}

/// Check that `grid` is strictly increasing with at least two points.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(invalid("grid", "need at least two time points"));
    }
    if let Some(bad) = grid.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonMonotoneGrid { index: bad });
    }
    match grid.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::NonMonotoneGrid { index: i + 1 }),
        None => Ok(()),
    }
}

/// `0, T/M, ..., T`.
pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
    g[steps] = horizon;
    g
}

/// Increments `(L(t_{i+1}) - L(t_i)) e_j`, `j < m`, of the cylindrical process
/// on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    alpha: f64,
    m: usize,
    grid: Vec<f64>,
    increments: Vec<f64>,
    seed: u64,
}

impl NoisePath {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of basis coordinates kept.
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    /// Increment over `(t_i, t_{i+1}]`.
    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.increments.chunks_exact(self.m)
    }

    /// Sum of all increments, i.e. `L(T) - L(0)` in each coordinate.
    pub fn total(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.m];
        for row in self.rows() {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        acc
    }

    /// Keep the first `m` coordinates.
    pub fn project(&self, m: usize) -> Result<NoisePath> {
        if m == 0 || m > self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: m,
            });
        }
        let increments = self.rows().flat_map(|r| r[..m].iter().copied()).collect();
        Ok(NoisePath {
            m,
            increments,
            grid: self.grid.clone(),
            ..*self
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# alpha={}, m={}, seed={}", self.alpha, self.m, self.seed)?;
        writeln!(w, "t_start,t_end,j,increment")?;
        for (i, row) in self.rows().enumerate() {
            let (a, b) = (csv::real(self.grid[i]), csv::real(self.grid[i + 1]));
            for (j, x) in row.iter().enumerate() {
                writeln!(w, "{a},{b},{},{}", j + 1, csv::real(*x))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<NoisePath> {
        let mut alpha = None;
        let mut m = None;
        let mut seed = None;
        let mut grid: Vec<f64> = Vec::new();
        let mut increments = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.starts_with('#') {
                for (k, v) in csv::parse_meta(&line) {
                    match k.as_str() {
                        "alpha" => alpha = Some(csv::parse_real(&v)?),
                        "m" => m = v.parse::<usize>().ok(),
                        "seed" => seed = v.parse::<u64>().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("t_start") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("expected 4 fields: `{line}`")));
            }
            let (a, b) = (csv::parse_real(f[0])?, csv::parse_real(f[1])?);
            let j: usize = f[2].parse().map_err(|_| Error::Parse(f[2].into()))?;
            if grid.is_empty() {
                grid.push(a);
            }
            if j == 1 {
                if *grid.last().unwrap() != a {
                    return Err(Error::Parse(format!("gap in grid at `{line}`")));
                }
                grid.push(b);
            }
            increments.push(csv::parse_real(f[3])?);
        }
        let (alpha, m, seed) = match (alpha, m, seed) {
            (Some(a), Some(m), Some(s)) => (a, m, s),
            _ => return Err(Error::Parse("missing `# alpha=.., m=.., seed=..` line".into())),
        };
        validate_grid(&grid)?;
        if increments.len() != m * (grid.len() - 1) {
            return Err(Error::DimensionMismatch {
                expected: m * (grid.len() - 1),
                found: increments.len(),
            });
        }
        Ok(NoisePath {
            alpha,
            m,
            grid,
            increments,
            seed,
        })
    }
}

fn fill_rows(alpha: f64, m: usize, grid: &[f64], seed: u64) -> Result<Vec<f64>> {
    let law = IsotropicStable::new(alpha, m)?;
    let mut inc = vec![0.0; m * (grid.len() - 1)];
    inc.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let mut r = rng::stream(seed, &[domain::NOISE_ROW, i as u64]);
        let dt = grid[i + 1] - grid[i];
        law.sample_into(&mut r, dt.powf(1.0 / alpha), row);
    });
    Ok(inc)
}

/// Truncated noise on `grid`: row `i` is `(Δt_i)^{1/α}` times a standard
/// isotropic draw in dimension `m`, from stream `(seed, row i)`.
pub fn generate_noise_path(alpha: f64, m: usize, grid: &[f64], seed: u64) -> Result<NoisePath> {
    validate_grid(grid)?;
    let increments = fill_rows(alpha, m, grid, seed)?;
    Ok(NoisePath {
        alpha,
        m,
        grid: grid.to_vec(),
        increments,
        seed,
    })
}

/// Append coordinates `m..m_new` to every increment. The existing columns are
/// kept bit-for-bit.
pub fn extend_dimension(path: &NoisePath, m_new: usize) -> Result<NoisePath> {
    if m_new < path.m {
        return Err(Error::DimensionNotExtended {
            current: path.m,
            requested: m_new,
        });
    }
    if m_new == path.m {
        return Ok(path.clone());
    }
    let mut inc = fill_rows(path.alpha, m_new, &path.grid, path.seed)?;
    // Same stream prefix, so this is a no-op for generated paths; it also
    // keeps paths read from disk intact.
    for (dst, src) in inc.chunks_exact_mut(m_new).zip(path.rows()) {
        dst[..path.m].copy_from_slice(src);
    }
    Ok(NoisePath {
        m: m_new,
        increments: inc,
        grid: path.grid.clone(),
        ..*path
    })
}
