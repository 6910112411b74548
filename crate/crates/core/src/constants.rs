//! Explicit constants of the tail and moment estimates and the spherical
//! part of the cylindrical Lévy measure.
//!
//! Every constant that involves the non-computable universal factor `c` of
//! the stable moment bound takes it as an explicit `c_convention` argument;
//! the default throughout the crate is `1`.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::csv::real;
use crate::error::{check_alpha, invalid, Error, Result};
use crate::rng::{self, domain};
use crate::stats;

/// `c_α = -α cos(απ/2) Γ(-α)`, continued by `π/2` at `α = 1`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha, 0.0, 2.0)?;
    if alpha == 1.0 {
        return Ok(PI / 2.0);
    }
    if (alpha - 1.0).abs() < 1e-4 {
        // reflection form, free of the removable singularity
        return Ok(PI / (2.0 * (alpha * PI / 2.0).sin() * gamma(alpha)));
    }
    Ok(-alpha * (alpha * PI / 2.0).cos() * gamma(-alpha))
}

/// `λₙ(S) = Γ(1/2) Γ((n+α)/2) / (Γ(n/2) Γ((1+α)/2))`.
pub fn sphere_total_mass(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha, 0.0, 2.0)?;
    if n == 0 {
        return Err(invalid("n", "dimension must be at least 1"));
    }
    let nf = n as f64;
    // paired so that n = 1 cancels exactly
    let a = ln_gamma(0.5) - ln_gamma(nf / 2.0);
    let b = ln_gamma((nf + alpha) / 2.0) - ln_gamma((1.0 + alpha) / 2.0);
    Ok((a + b).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConstants {
    pub c1: f64,
    pub c2: f64,
    /// `C_{α,p}`
    pub cap_c: f64,
}

/// `c₁ = c Γ(1/2)/(c_α Γ((1+α)/2))`, `c₂ = c₁ (4-α)/(2-α)`,
/// `C_{α,p} = c₂^{p/α} α/(α-p)`.
pub fn chain_constants(alpha: f64, p: f64, c_convention: f64) -> Result<ChainConstants> {
    check_alpha(alpha, 0.0, 2.0)?;
    if !(p > 0.0 && p < alpha) {
        return Err(Error::MomentOrder { p, alpha });
    }
    let (c1, c2) = c1_c2(alpha, c_convention)?;
    Ok(ChainConstants {
        c1,
        c2,
        cap_c: c2.powf(p / alpha) * alpha / (alpha - p),
    })
}

fn c1_c2(alpha: f64, c_convention: f64) -> Result<(f64, f64)> {
    if !(c_convention > 0.0 && c_convention.is_finite()) {
        return Err(invalid("c_convention", "must be positive"));
    }
    let c1 = c_convention * limit_constant(alpha)?;
    Ok((c1, c1 * (4.0 - alpha) / (2.0 - alpha)))
}

/// `Γ(1/2)/(c_α Γ((1+α)/2))`: the `c`-free factor of `c₁`.
pub fn limit_constant(alpha: f64) -> Result<f64> {
    Ok((ln_gamma(0.5) - ln_gamma((1.0 + alpha) / 2.0)).exp() / c_alpha(alpha)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonBounds {
    pub c3: f64,
    pub t_uniq: f64,
    pub t_picard: f64,
    /// `min(t_uniq, t_picard)`
    pub binding: f64,
}

/// Grid step used for the supremum over `p` in `c₃`.
pub const C3_GRID_STEP: f64 = 1e-4;

fn c3_term(k: f64, c_f: f64, c_g: f64, p: f64) -> f64 {
    2f64.powf(p - 1.0) * (k * c_f.powf(p) + c_g.powf(p))
}

/// `c₃` with the supremum over `p ∈ (1, α)` taken on a grid of the given step
/// plus both endpoint limits, refined by golden-section search around the
/// best grid point.
pub fn c3_on_grid(alpha: f64, c_f: f64, c_g: f64, c_convention: f64, step: f64) -> Result<f64> {
    check_alpha(alpha, 1.0, 2.0)?;
    if !(c_f >= 0.0 && c_g >= 0.0) {
        return Err(invalid("c_F, c_G", "must be nonnegative"));
    }
    if c_f == 0.0 && c_g == 0.0 {
        return Ok(0.0);
    }
    let (_, c2) = c1_c2(alpha, c_convention)?;
    let k = (alpha - 1.0) / (c2.powf(1.0 / alpha).min(c2) * alpha);
    let f = |p: f64| c3_term(k, c_f, c_g, p);
    let cells = ((alpha - 1.0) / step).ceil().max(1.0) as usize;
    let h = (alpha - 1.0) / cells as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 1.0);
    for i in 0..=cells {
        let p = if i == cells { alpha } else { 1.0 + i as f64 * h };
        let v = f(p);
        if v > best {
            best = v;
            arg = p;
        }
    }
    let (mut a, mut b) = ((arg - h).max(1.0), (arg + h).min(alpha));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) >= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    Ok(best.max(f(0.5 * (a + b))))
}

/// `c₃` and the two admissible-horizon bounds.
pub fn c3_and_tmax(alpha: f64, c_f: f64, c_g: f64, c_convention: f64) -> Result<HorizonBounds> {
    let c3 = c3_on_grid(alpha, c_f, c_g, c_convention, C3_GRID_STEP)?;
    let (_, c2) = c1_c2(alpha, c_convention)?;
    let t_uniq = (1.0 / (alpha * c2 * c3.powf(alpha).max(c3))).min(1.0);
    let t_picard = ((c2.max(c2.powf(1.0 / alpha)) * c3).powf(-alpha)).min(1.0);
    Ok(HorizonBounds {
        c3,
        t_uniq,
        t_picard,
        binding: t_uniq.min(t_picard),
    })
}

/// How [`levy_tail_mass`] integrates over the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Quadrature for up to three non-zero entries, Monte Carlo beyond.
    Auto,
    Quadrature,
    MonteCarlo {
        points: usize,
        seed: u64,
    },
}

/// Points and seed used by [`Method::Auto`] in Monte-Carlo mode.
pub const AUTO_MC_POINTS: usize = 1_000_000;
pub const AUTO_MC_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMass {
    pub value: f64,
    /// Zero for quadrature.
    pub stderr: f64,
}

/// Mass of the complement of the closed unit ball under the Lévy measure of
/// `ψ(L(1))`, for `ψ` with singular values `gamma`:
/// `(1/c_α) ∫_S (Σ γ_j² x_j²)^{α/2} λₙ(dx)`.
///
/// Zero entries are dropped first; the value does not depend on them.
pub fn levy_tail_mass(gamma: &[f64], alpha: f64, method: Method) -> Result<TailMass> {
    let ca = c_alpha(alpha)?;
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(invalid("gamma", "entries must be finite"));
    }
    let g: Vec<f64> = gamma.iter().copied().filter(|x| *x != 0.0).map(f64::abs).collect();
    if g.is_empty() {
        return Ok(TailMass {
            value: 0.0,
            stderr: 0.0,
        });
    }
    let mass = sphere_total_mass(g.len(), alpha)?;
    let (mean, se) = match method {
        Method::Quadrature => (sphere_mean_quadrature(&g, alpha)?, 0.0),
        Method::Auto if g.len() <= 3 => (sphere_mean_quadrature(&g, alpha)?, 0.0),
        Method::Auto => sphere_mean_mc(&g, alpha, AUTO_MC_POINTS, AUTO_MC_SEED),
        Method::MonteCarlo { points, seed } => {
            if points < 2 {
                return Err(Error::InsufficientSamples {
                    needed: 2,
                    found: points,
                });
            }
            sphere_mean_mc(&g, alpha, points, seed)
        }
    };
    Ok(TailMass {
        value: mass * mean / ca,
        stderr: mass * se / ca,
    })
}

/// `λₙ(S)/(c_α n^{α/2}) (Σ γ_j²)^{α/2}` with `n = gamma.len()`.
pub fn jensen_bound(gamma: &[f64], alpha: f64) -> Result<f64> {
    if gamma.is_empty() {
        return Err(Error::Empty("gamma"));
    }
    let n = gamma.len();
    let s: f64 = gamma.iter().map(|g| g * g).sum();
    Ok(sphere_total_mass(n, alpha)? / (c_alpha(alpha)? * (n as f64).powf(alpha / 2.0)) * s.powf(alpha / 2.0))
}

/// `n → ∞` limit of [`jensen_bound`] at fixed `Σ γ_j² = sum_sq`.
///
/// Since `Γ((n+α)/2)/Γ(n/2) ~ (n/2)^{α/2}` this equals
/// `limit_constant(α) (sum_sq/2)^{α/2}`, below `limit_constant(α) sum_sq^{α/2}`
/// by the factor `2^{-α/2}`.
pub fn jensen_limit(sum_sq: f64, alpha: f64) -> Result<f64> {
    Ok(limit_constant(alpha)? * (sum_sq / 2.0).powf(alpha / 2.0))
}

/// Mean of `(Σ γ_j² x_j²)^{α/2}` under the uniform probability on the
/// sphere `S^{n-1}`, `n ≤ 3`.
pub fn sphere_mean_quadrature(gamma: &[f64], alpha: f64) -> Result<f64> {
    let h = alpha / 2.0;
    let g2: Vec<f64> = gamma.iter().map(|g| g * g).collect();
    match g2.as_slice() {
        [a] => Ok(a.powf(h)),
        [a, b] => {
            // periodic smooth integrand: the trapezoid rule is spectrally accurate
            let k = 1usize << 14;
            let s: f64 = (0..k)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / k as f64;
                    let (s, c) = th.sin_cos();
                    (a * c * c + b * s * s).powf(h)
                })
                .sum();
            Ok(s / k as f64)
        }
        [a, b, c] => {
            // z = x₃ uniform on [-1,1], azimuth φ uniform on [0, 2π)
            let (nodes, weights) = gauss_legendre(16);
            let panels = 32;
            let kphi = 1usize << 10;
            let trig: Vec<(f64, f64)> = (0..kphi)
                .map(|j| {
                    let (s, co) = (2.0 * PI * j as f64 / kphi as f64).sin_cos();
                    (co * co, s * s)
                })
                .collect();
            let mut total = 0.0;
            for pnl in 0..panels {
                let lo = -1.0 + 2.0 * pnl as f64 / panels as f64;
                let half = 1.0 / panels as f64;
                for (x, w) in nodes.iter().zip(&weights) {
                    let z = lo + half * (x + 1.0);
                    let r2 = 1.0 - z * z;
                    let inner: f64 = trig
                        .iter()
                        .map(|(c2, s2)| (r2 * (a * c2 + b * s2) + c * z * z).powf(h))
                        .sum::<f64>()
                        / kphi as f64;
                    total += w * half * inner;
                }
            }
            Ok(total / 2.0)
        }
        _ => Err(Error::QuadratureDimension(g2.len())),
    }
}

/// Monte-Carlo mean over the uniform sphere. Each Gaussian-normalized point is
/// averaged over all cyclic permutations of its coordinates, so the empirical
/// second moments equal `1/n` exactly and the estimate obeys the discrete
/// Jensen inequality against [`jensen_bound`].
fn sphere_mean_mc(gamma: &[f64], alpha: f64, points: usize, seed: u64) -> (f64, f64) {
    let n = gamma.len();
    let h = alpha / 2.0;
    let g2: Vec<f64> = gamma.iter().map(|g| g * g).collect();
    let vals: Vec<f64> = rng::par_draws(points, seed, domain::SPHERE, |r| {
        let mut x2 = vec![0.0; n];
        let mut s = 0.0;
        for v in x2.iter_mut() {
            let z: f64 = StandardNormal.sample(r);
            *v = z * z;
            s += *v;
        }
        let mut acc = 0.0;
        for shift in 0..n {
            let q: f64 = (0..n).map(|j| g2[j] * x2[(j + shift) % n]).sum();
            acc += (q / s).powf(h);
        }
        acc / n as f64
    });
    stats::mean_se(&vals)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Every constant for one `(α, p)` with the coefficient constants of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub alpha: f64,
    pub p: f64,
    pub n: usize,
    pub c_f: f64,
    pub c_g: f64,
    pub c_convention: f64,
    pub c_alpha: f64,
    pub lambda_total_mass: f64,
    pub c1: f64,
    pub c2: f64,
    pub cap_c: f64,
    /// `None` unless `1 < α < 2`.
    pub horizon: Option<HorizonBounds>,
}

impl ConstantsReport {
    pub fn compute(alpha: f64, p: f64, n: usize, c_f: f64, c_g: f64, c_convention: f64) -> Result<Self> {
        let chain = chain_constants(alpha, p, c_convention)?;
        let horizon = if alpha > 1.0 {
            Some(c3_and_tmax(alpha, c_f, c_g, c_convention)?)
        } else {
            None
        };
        Ok(Self {
            alpha,
            p,
            n,
            c_f,
            c_g,
            c_convention,
            c_alpha: c_alpha(alpha)?,
            lambda_total_mass: sphere_total_mass(n, alpha)?,
            c1: chain.c1,
            c2: chain.c2,
            cap_c: chain.cap_c,
            horizon,
        })
    }

    /// Ordered `(key, value)` pairs.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![
            ("alpha", real(self.alpha)),
            ("p", real(self.p)),
            ("n", self.n.to_string()),
            ("c_F", real(self.c_f)),
            ("c_G", real(self.c_g)),
            ("c_convention", real(self.c_convention)),
            ("c_alpha", real(self.c_alpha)),
            ("lambda_total_mass", real(self.lambda_total_mass)),
            ("c1", real(self.c1)),
            ("c2", real(self.c2)),
            ("C", real(self.cap_c)),
        ];
        if let Some(h) = self.horizon {
            v.extend([
                ("c3", real(h.c3)),
                ("T_max_uniqueness", real(h.t_uniq)),
                ("T_max_picard", real(h.t_picard)),
                ("T_binding", real(h.binding)),
            ]);
        }
        v
    }

    pub fn to_key_value(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in self.entries() {
            s.push_str(&format!("{k},{v}\n"));
        }
        s
    }
}
