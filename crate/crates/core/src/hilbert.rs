//! Truncated Hilbert-space machinery: Hilbert–Schmidt matrices, the diagonal
//! semigroup model and the checks of its standing assumptions.
//!
//! A [`DiagonalModel`] lives on the first `n` eigenvectors `h_k` of `-A`
//! (eigenvalues `λ_k`) and the first `m` basis vectors `e_k` of the noise
//! space. Its coefficients act coordinate-wise:
//!
//! ```text
//! F(x)_k      = f_k s(x_k)
//! G(x) e_k    = κ_k s(x_k) h_k      (k < min(n, m), zero otherwise)
//! S(t) h_k    = exp(-λ_k t) h_k
//! ```
//!
//! with a bounded, 1-Lipschitz shape `s`, `|s| ≤ 1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::stats;

/// Sizes of the truncated bases: `m` for the noise space, `n` for the state
/// space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisTruncation {
    pub m: usize,
    pub n: usize,
}

impl BasisTruncation {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("truncation", "m and n must be at least 1"));
        }
        Ok(Self { m, n })
    }
}

/// A finite-rank Hilbert–Schmidt operator `U → H` as an `n × m` matrix in the
/// truncated bases.
#[derive(Debug, Clone, PartialEq)]
pub struct HSMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl HSMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Row-major construction.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("HSMatrix", "entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    /// `rows × cols` matrix with `diag` on the leading diagonal.
    pub fn diagonal(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (k, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.data[k * cols + k] = d;
        }
        m
    }

    /// `value · (e_col ⊗ h_row)`.
    pub fn rank_one(rows: usize, cols: usize, row: usize, col: usize, value: f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.data[row * cols + col] = value;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.iter().map(|x| c * x).collect(),
            ..*self
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &HSMatrix, b: f64) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
            ..*self
        })
    }

    /// `out = self · v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; self.rows.min(self.cols)];
        }
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rule producing the `k`-th coefficient (`k = 1, 2, ...`).
///
/// Textual forms: `dirichlet[:c]` (`c π² k²`), `power:c:p` (`c k^p`),
/// `const:c`, `list:a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefRule {
    Dirichlet { scale: f64 },
    Power { scale: f64, exponent: f64 },
    Const(f64),
    List(Vec<f64>),
}

impl CoefRule {
    pub fn eval(&self, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            CoefRule::Dirichlet { scale } => scale * PI * PI * kf * kf,
            CoefRule::Power { scale, exponent } => scale * kf.powf(*exponent),
            CoefRule::Const(c) => *c,
            CoefRule::List(v) => v.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn take(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.eval(k)).collect()
    }

    /// `(c, p)` if the rule is exactly `c k^p`.
    pub fn power_law(&self) -> Option<(f64, f64)> {
        match self {
            CoefRule::Dirichlet { scale } => Some((scale * PI * PI, 2.0)),
            CoefRule::Power { scale, exponent } => Some((*scale, *exponent)),
            CoefRule::Const(c) => Some((*c, 0.0)),
            CoefRule::List(_) => None,
        }
    }

    /// Finitely many non-zero terms.
    pub fn is_finite_support(&self) -> bool {
        matches!(self, CoefRule::List(_)) || *self == CoefRule::Const(0.0)
    }
}

impl FromStr for CoefRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("coefficient rule `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let mut parts = s.trim().splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        match (head, rest) {
            ("dirichlet", None) => Ok(CoefRule::Dirichlet { scale: 1.0 }),
            ("dirichlet", Some(c)) => Ok(CoefRule::Dirichlet { scale: num(c)? }),
            ("const", Some(c)) => Ok(CoefRule::Const(num(c)?)),
            ("power", Some(r)) => {
                let (c, p) = r.split_once(':').ok_or_else(bad)?;
                Ok(CoefRule::Power {
                    scale: num(c)?,
                    exponent: num(p)?,
                })
            }
            ("list", Some(r)) => Ok(CoefRule::List(r.split(',').map(num).collect::<Result<Vec<_>>>()?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for CoefRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefRule::Dirichlet { scale } if *scale == 1.0 => write!(f, "dirichlet"),
            CoefRule::Dirichlet { scale } => write!(f, "dirichlet:{scale}"),
            CoefRule::Power { scale, exponent } => write!(f, "power:{scale}:{exponent}"),
            CoefRule::Const(c) => write!(f, "const:{c}"),
            CoefRule::List(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", s.join(","))
            }
        }
    }
}

/// Bounded scalar shape with `|s| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Tanh,
    Sin,
    /// `clamp(x, -1, 1)`
    Clip,
    /// `s ≡ 1`: state-independent coefficients.
    Unit,
}

impl Shape {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Shape::Tanh => x.tanh(),
            Shape::Sin => x.sin(),
            Shape::Clip => x.clamp(-1.0, 1.0),
            Shape::Unit => 1.0,
        }
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            Shape::Unit => 0.0,
            _ => 1.0,
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tanh" => Ok(Shape::Tanh),
            "sin" => Ok(Shape::Sin),
            "clip" => Ok(Shape::Clip),
            "unit" | "one" => Ok(Shape::Unit),
            _ => Err(Error::Parse(format!("unknown shape `{s}`"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Tanh => "tanh",
            Shape::Sin => "sin",
            Shape::Clip => "clip",
            Shape::Unit => "unit",
        })
    }
}

/// Diagonal generator, fractional exponent and coefficient families.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalModel {
    truncation: BasisTruncation,
    delta: f64,
    lambda_rule: CoefRule,
    kappa_rule: CoefRule,
    f_rule: CoefRule,
    shape: Shape,
    lambdas: Vec<f64>,
    kappa: Vec<f64>,
    f: Vec<f64>,
}

impl DiagonalModel {
    pub fn from_rules(
        truncation: BasisTruncation,
        delta: f64,
        lambda_rule: CoefRule,
        kappa_rule: CoefRule,
        f_rule: CoefRule,
        shape: Shape,
    ) -> Result<Self> {
        let BasisTruncation { n, m } = truncation;
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid("delta", format!("must lie in (0,1], got {delta}")));
        }
        let lambdas = lambda_rule.take(n);
        if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid("lambda_rule", "eigenvalues must be positive"));
        }
        if lambdas.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("lambda_rule", "eigenvalues must be nondecreasing"));
        }
        let kappa = kappa_rule.take(n.min(m));
        let f = f_rule.take(n);
        for (name, v) in [("kappa_rule", &kappa), ("f_rule", &f)] {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(invalid(name, "amplitudes must be finite and nonnegative"));
            }
        }
        Ok(Self {
            truncation,
            delta,
            lambda_rule,
            kappa_rule,
            f_rule,
            shape,
            lambdas,
            kappa,
            f,
        })
    }

    /// Dirichlet heat semigroup on `(0,1)`: `λ_k = π²k²`, `δ = 1/4`,
    /// `κ_k = κ k^{-3/2}`, `f_k = φ k^{-3/2}`, shape `tanh`.
    pub fn heat_preset(n: usize, m: usize, kappa: f64, phi: f64) -> Result<Self> {
        Self::from_rules(
            BasisTruncation::new(m, n)?,
            0.25,
            CoefRule::Dirichlet { scale: 1.0 },
            CoefRule::Power {
                scale: kappa,
                exponent: -1.5,
            },
            CoefRule::Power {
                scale: phi,
                exponent: -1.5,
            },
            Shape::Tanh,
        )
    }

    /// Same generator and noise, with the given coefficient rules.
    pub fn with_coefficients(&self, kappa_rule: CoefRule, f_rule: CoefRule, shape: Shape) -> Result<Self> {
        Self::from_rules(
            self.truncation,
            self.delta,
            self.lambda_rule.clone(),
            kappa_rule,
            f_rule,
            shape,
        )
    }

    pub fn n(&self) -> usize {
        self.truncation.n
    }

    pub fn m(&self) -> usize {
        self.truncation.m
    }

    pub fn truncation(&self) -> BasisTruncation {
        self.truncation
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn drift_amplitudes(&self) -> &[f64] {
        &self.f
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn lambda_rule(&self) -> &CoefRule {
        &self.lambda_rule
    }

    pub fn kappa_rule(&self) -> &CoefRule {
        &self.kappa_rule
    }

    pub fn f_rule(&self) -> &CoefRule {
        &self.f_rule
    }

    /// `F(x)`.
    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        self.f.iter().zip(x).map(|(f, xk)| f * self.shape.eval(*xk)).collect()
    }

    /// Diagonal of `G(x)`: entry `k` is `κ_k s(x_k)`.
    pub fn diffusion_diagonal(&self, x: &[f64]) -> Vec<f64> {
        self.kappa
            .iter()
            .zip(x)
            .map(|(k, xk)| k * self.shape.eval(*xk))
            .collect()
    }

    /// `G(x)` as an `n × m` matrix.
    pub fn diffusion(&self, x: &[f64]) -> HSMatrix {
        HSMatrix::diagonal(self.n(), self.m(), &self.diffusion_diagonal(x))
    }

    /// Analytic Lipschitz constants `(C_F, C_G) = (max f_k, max κ_k) · Lip(s)`.
    pub fn lipschitz_bounds(&self) -> (f64, f64) {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let l = self.shape.lipschitz();
        (l * max(&self.f), l * max(&self.kappa))
    }

    /// Bounds `M₀'` on `sup_{t,x} ‖S(t)F(x)‖` and `sup_{t,x} ‖S(t)G(x)‖_HS`
    /// in the truncated model (`|s| ≤ 1`).
    pub fn boundedness_bounds(&self) -> (f64, f64) {
        (norm(&self.f), norm(&self.kappa))
    }

    /// Hölder constants `c = C ∨ M₀'` for `F` and `G`.
    pub fn holder_constants(&self) -> (f64, f64) {
        let (cf, cg) = self.lipschitz_bounds();
        let (mf, mg) = self.boundedness_bounds();
        (cf.max(mf), cg.max(mg))
    }

    /// Parse `key=value` lines with keys
    /// `n, m, lambda_rule, delta, kappa_rule, f_rule, shape`.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut n = None;
        let mut m = None;
        let mut delta = None;
        let mut lambda_rule = None;
        let mut kappa_rule = None;
        let mut f_rule = None;
        let mut shape = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let v = v.trim();
            let int = |v: &str| v.parse::<usize>().map_err(|_| Error::Parse(format!("`{v}`")));
            match k.trim() {
                "n" => n = Some(int(v)?),
                "m" => m = Some(int(v)?),
                "delta" => delta = Some(crate::csv::parse_real(v)?),
                "lambda_rule" => lambda_rule = Some(v.parse()?),
                "kappa_rule" => kappa_rule = Some(v.parse()?),
                "f_rule" => f_rule = Some(v.parse()?),
                "shape" => shape = Some(v.parse()?),
                other => return Err(Error::Parse(format!("unknown model key `{other}`"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing key `n`".into()))?;
        Self::from_rules(
            BasisTruncation::new(m.unwrap_or(n), n)?,
            delta.unwrap_or(0.25),
            lambda_rule.unwrap_or(CoefRule::Dirichlet { scale: 1.0 }),
            kappa_rule.ok_or_else(|| Error::Parse("missing key `kappa_rule`".into()))?,
            f_rule.ok_or_else(|| Error::Parse("missing key `f_rule`".into()))?,
            shape.unwrap_or(Shape::Tanh),
        )
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "n={}\nm={}\nlambda_rule={}\ndelta={}\nkappa_rule={}\nf_rule={}\nshape={}\n",
            self.n(),
            self.m(),
            self.lambda_rule,
            self.delta,
            self.kappa_rule,
            self.f_rule,
            self.shape
        )
    }
}

/// `S(t)x`: coordinate `k` multiplied by `exp(-λ_k t)`.
pub fn apply_semigroup(model: &DiagonalModel, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if x.len() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: x.len(),
        });
    }
    Ok(model.lambdas.iter().zip(x).map(|(l, v)| (-l * t).exp() * v).collect())
}

/// `‖(-A)^δ x‖ = sqrt(Σ λ_k^{2δ} x_k²)`.
pub fn fractional_norm(model: &DiagonalModel, delta: f64, x: &[f64]) -> f64 {
    model
        .lambdas
        .iter()
        .zip(x)
        .map(|(l, v)| l.powf(2.0 * delta) * v * v)
        .sum::<f64>()
        .sqrt()
}

/// `C(δ) = sup_{y>0} (1 - e^{-y}) y^{-δ}`.
///
/// For `δ < 1` the supremum sits at the positive root of `y = δ(e^y - 1)`;
/// for `δ = 1` it is the limit `1` at `y → 0`.
pub fn semigroup_constant(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("must lie in (0,1], got {delta}")));
    }
    if delta == 1.0 {
        return Ok(1.0);
    }
    // h(y) = y - δ(e^y - 1) is positive just right of 0 and negative for
    // large y.
    let h = |y: f64| y - delta * y.exp_m1();
    let (mut lo, mut hi) = (f64::MIN_POSITIVE.sqrt(), 1.0);
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    Ok(-(-y).exp_m1() * y.powf(-delta))
}

/// Worst value of `‖S(t) - Id‖_{L(D((-A)^δ), H)} / (C t^δ)` over a grid.
#[derive(Debug, Clone)]
pub struct NormContinuityReport {
    pub delta: f64,
    pub constant: f64,
    pub worst_ratio: f64,
    /// `(t, operator norm, C t^δ)`
    pub rows: Vec<(f64, f64, f64)>,
}

pub fn check_norm_continuity(model: &DiagonalModel, delta: f64, t_grid: &[f64]) -> Result<NormContinuityReport> {
    let constant = semigroup_constant(delta)?;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let op = model
            .lambdas
            .iter()
            .map(|&l| -(-l * t).exp_m1() * l.powf(-delta))
            .fold(0.0, f64::max);
        let bound = constant * t.powf(delta);
        let ratio = if op == 0.0 { 0.0 } else { op / bound };
        worst = worst.max(ratio);
        rows.push((t, op, bound));
    }
    Ok(NormContinuityReport {
        delta,
        constant,
        worst_ratio: worst,
        rows,
    })
}

/// Empirical boundedness constant and small-time behaviour of the series.
#[derive(Debug, Clone)]
pub struct A2Report {
    /// Max over the trial set of `‖S(t)F(x)‖_{D((-A)^δ)}`.
    pub m0_drift: f64,
    /// Max over the trial set of `‖S(t)G(x)‖_{L_HS(U, D((-A)^δ))}`.
    pub m0_diffusion: f64,
    pub m0: f64,
    /// `(t, drift series, diffusion series)` on the refining grid, `|s| = 1`,
    /// summed well past the truncation.
    pub profile: Vec<(f64, f64, f64)>,
    /// Analytic bound on the squared series beyond the truncation, when the
    /// rules are power laws with a convergent tail.
    pub tail_bound: Option<f64>,
    pub divergent: bool,
    /// Summability of the coefficient families fails.
    pub violation: Option<String>,
}

fn series_value(lambda: &CoefRule, amp: &CoefRule, delta: f64, t: f64, n_min: usize) -> f64 {
    let mut sum = 0.0;
    let mut k = 1usize;
    // enough terms that exp(-2 λ_k t) has died, capped for safety
    loop {
        let l = lambda.eval(k);
        let a = amp.eval(k);
        sum += l.powf(2.0 * delta) * (-2.0 * l * t).exp() * a * a;
        if (k >= n_min && l * t > 40.0) || k >= 5_000_000 {
            break;
        }
        if let CoefRule::List(v) = amp {
            if k >= v.len() {
                break;
            }
        }
        k += 1;
    }
    sum
}

/// Check the fractional boundedness assumption on the trial set and probe
/// the small-time behaviour of the series `Σ λ_k^{2δ} e^{-2λ_k t} a_k²`.
pub fn check_a2(model: &DiagonalModel, t_grid: &[f64], trial_points: &[Vec<f64>]) -> Result<A2Report> {
    let d = model.delta;
    let mut m0_drift: f64 = 0.0;
    let mut m0_diffusion: f64 = 0.0;
    for &t in t_grid {
        if t <= 0.0 {
            return Err(invalid("t_grid", "times must lie in (0, T]"));
        }
        for x in trial_points {
            if x.len() != model.n() {
                return Err(Error::DimensionMismatch {
                    expected: model.n(),
                    found: x.len(),
                });
            }
            let sf = apply_semigroup(model, t, &model.drift(x))?;
            m0_drift = m0_drift.max(fractional_norm(model, d, &sf));
            let g = model.diffusion_diagonal(x);
            let s: f64 = g
                .iter()
                .zip(&model.lambdas)
                .map(|(gk, l)| l.powf(2.0 * d) * (-2.0 * l * t).exp() * gk * gk)
                .sum();
            m0_diffusion = m0_diffusion.max(s.sqrt());
        }
    }

    let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    let refine: Vec<f64> = (0..24).map(|j| t_min * 0.5f64.powi(j)).collect();
    let profile: Vec<(f64, f64, f64)> = refine
        .iter()
        .map(|&t| {
            (
                t,
                series_value(&model.lambda_rule, &model.f_rule, d, t, model.n()),
                series_value(&model.lambda_rule, &model.kappa_rule, d, t, model.n()),
            )
        })
        .collect();
    let grows = |pick: fn(&(f64, f64, f64)) -> f64| {
        let tail = &profile[profile.len() - 6..];
        let xs: Vec<f64> = tail.iter().map(|r| r.0).collect();
        let ys: Vec<f64> = tail.iter().map(pick).collect();
        stats::loglog_slope(&xs, &ys).is_some_and(|s| s < -0.05)
    };
    let divergent = grows(|r| r.1) || grows(|r| r.2);

    let mut violation = None;
    let mut tail_bound = None;
    if let Some((cl, pl)) = model.lambda_rule.power_law() {
        let mut tail = 0.0;
        for (name, rule) in [("f_rule", &model.f_rule), ("kappa_rule", &model.kappa_rule)] {
            let Some((ca, pa)) = rule.power_law() else {
                continue;
            };
            if ca == 0.0 {
                continue;
            }
            if 2.0 * pa >= -1.0 {
                violation = Some(format!("{name}: squared amplitudes k^{} are not summable", 2.0 * pa));
            }
            let q = 2.0 * d * pl + 2.0 * pa;
            if q >= -1.0 {
                violation.get_or_insert(format!("{name}: series exponent {q} >= -1"));
                tail = f64::INFINITY;
            } else {
                // Σ_{k>n} C k^q ≤ C n^{q+1} / (-(q+1))
                let c = cl.powf(2.0 * d) * ca * ca;
                tail += c * (model.n() as f64).powf(q + 1.0) / (-(q + 1.0));
            }
        }
        if tail.is_finite() {
            tail_bound = Some(tail);
        }
    }
    if divergent && violation.is_none() {
        violation = Some("series grows without bound as t -> 0".into());
    }
    Ok(A2Report {
        m0_drift,
        m0_diffusion,
        m0: m0_drift.max(m0_diffusion),
        profile,
        tail_bound,
        divergent,
        violation,
    })
}

/// Empirical Lipschitz constants with the analytic bounds for comparison.
#[derive(Debug, Clone)]
pub struct A3Report {
    pub c_f: f64,
    pub c_g: f64,
    pub analytic_c_f: f64,
    pub analytic_c_g: f64,
}

pub fn check_a3(model: &DiagonalModel, point_pairs: &[(Vec<f64>, Vec<f64>)], t_grid: &[f64]) -> Result<A3Report> {
    let mut c_f: f64 = 0.0;
    let mut c_g: f64 = 0.0;
    for (i, (x, y)) in point_pairs.iter().enumerate() {
        let dist = norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dist == 0.0 {
            return Err(Error::DegeneratePair(i));
        }
        let df: Vec<f64> = model.drift(x).iter().zip(model.drift(y)).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = model
            .diffusion_diagonal(x)
            .iter()
            .zip(model.diffusion_diagonal(y))
            .map(|(a, b)| a - b)
            .collect();
        for &t in std::iter::once(&0.0).chain(t_grid) {
            c_f = c_f.max(norm(&apply_semigroup(model, t, &df)?) / dist);
            let hs: f64 = dg
                .iter()
                .zip(&model.lambdas)
                .map(|(g, l)| (-2.0 * l * t).exp() * g * g)
                .sum::<f64>()
                .sqrt();
            c_g = c_g.max(hs / dist);
        }
    }
    let (analytic_c_f, analytic_c_g) = model.lipschitz_bounds();
    Ok(A3Report {
        c_f,
        c_g,
        analytic_c_f,
        analytic_c_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_mode() -> DiagonalModel {
        DiagonalModel::from_rules(
            BasisTruncation::new(2, 2).unwrap(),
            0.5,
            CoefRule::List(vec![1.0, 4.0]),
            CoefRule::Const(0.0),
            CoefRule::Const(0.0),
            Shape::Tanh,
        )
        .unwrap()
    }

    #[test]
    fn semigroup_examples() {
        let m = two_mode();
        assert_eq!(apply_semigroup(&m, 0.0, &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        let v = apply_semigroup(&m, 2f64.ln(), &[1.0, 1.0]).unwrap();
        assert_relative_eq!(v[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(v[1], 1.0 / 16.0, epsilon = 1e-15);
        assert!(matches!(
            apply_semigroup(&m, -1.0, &[1.0, 1.0]),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn fractional_norm_examples() {
        let m = two_mode();
        assert_eq!(fractional_norm(&m, 0.0, &[3.0, 4.0]), 5.0);
        assert_relative_eq!(fractional_norm(&m, 0.5, &[1.0, 1.0]), 5f64.sqrt(), epsilon = 1e-15);
        let heat = DiagonalModel::heat_preset(2, 2, 1.0, 1.0).unwrap();
        assert_relative_eq!(fractional_norm(&heat, 0.25, &[1.0, 0.0]), PI.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn semigroup_constant_against_brute_force() {
        for delta in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let brute = (1..200_000)
                .map(|i| {
                    let y = 1e-4 * i as f64;
                    -(-y).exp_m1() * y.powf(-delta)
                })
                .fold(0.0, f64::max);
            let c = semigroup_constant(delta).unwrap();
            assert!(c >= brute - 1e-12 && c - brute < 1e-7, "delta={delta}: {c} vs {brute}");
        }
        assert_eq!(semigroup_constant(1.0).unwrap(), 1.0);
        assert!(semigroup_constant(0.0).is_err());
    }

    #[test]
    fn norm_continuity_examples() {
        let heat = DiagonalModel::heat_preset(3, 3, 1.0, 1.0).unwrap();
        let r = check_norm_continuity(&heat, 0.5, &[0.0, 1e-3]).unwrap();
        assert_eq!(r.rows[0].1, 0.0);
        assert!(r.worst_ratio <= 1.0 + 1e-9);
        let r1 = check_norm_continuity(&heat, 1.0, &[1e-4, 1e-2, 1.0]).unwrap();
        assert!(r1.worst_ratio <= 1.0);
    }

    #[test]
    fn a2_zero_coefficients() {
        let m = two_mode();
        let r = check_a2(&m, &[0.1, 0.01], &[vec![1.0, -2.0]]).unwrap();
        assert_eq!(r.m0, 0.0);
        assert!(!r.divergent);
    }

    #[test]
    fn a2_preset_is_bounded_and_slow_decay_diverges() {
        let heat = DiagonalModel::heat_preset(8, 8, 1.0, 1.0).unwrap();
        let trial: Vec<Vec<f64>> = vec![vec![10.0; 8], vec![-3.0; 8]];
        let r = check_a2(&heat, &[1e-3, 1e-2, 0.1], &trial).unwrap();
        assert!(!r.divergent, "{:?}", r.profile.last());
        assert!(r.violation.is_none());
        // Σ π k · k^{-3} = π ζ(2) bounds the full series
        let full = PI * PI * PI / 6.0;
        assert!(r.profile.iter().all(|p| p.2 <= full + 1e-9));
        assert!(r.m0_diffusion <= full.sqrt());
        // π·8^{-1} from each of the two families
        assert_relative_eq!(r.tail_bound.unwrap(), PI / 4.0, epsilon = 1e-12);

        let rough = heat
            .with_coefficients(
                CoefRule::Power {
                    scale: 1.0,
                    exponent: -0.3,
                },
                CoefRule::Const(0.0),
                Shape::Tanh,
            )
            .unwrap();
        let r = check_a2(&rough, &[1e-3, 1e-2, 0.1], &trial).unwrap();
        assert!(r.divergent);
        assert!(r.violation.is_some());
    }

    #[test]
    fn a3_examples() {
        let heat = DiagonalModel::heat_preset(6, 6, 1.0, 1.0).unwrap();
        let pairs = vec![
            (vec![0.0; 6], vec![0.01; 6]),
            (vec![1.0; 6], vec![-1.0; 6]),
            (
                vec![0.3, -0.2, 0.1, 0.0, 0.5, 2.0],
                vec![0.31, -0.2, 0.1, 0.0, 0.5, 2.0],
            ),
        ];
        let r = check_a3(&heat, &pairs, &[0.01, 0.1]).unwrap();
        assert!(r.c_f <= 1.0 + 1e-12 && r.c_g <= 1.0 + 1e-12);
        assert!(r.c_f > 0.9, "near-zero pair probes the slope of tanh");

        let twice = heat
            .with_coefficients(
                CoefRule::Power {
                    scale: 1.0,
                    exponent: -1.5,
                },
                CoefRule::Power {
                    scale: 2.0,
                    exponent: -2.0,
                },
                Shape::Tanh,
            )
            .unwrap();
        let r = check_a3(&twice, &pairs, &[0.01]).unwrap();
        assert!(r.c_f <= 2.0);
        assert_eq!(r.analytic_c_f, 2.0);

        let constant_f = heat
            .with_coefficients(CoefRule::Const(0.0), CoefRule::Const(1.0), Shape::Unit)
            .unwrap();
        assert_eq!(check_a3(&constant_f, &pairs, &[0.1]).unwrap().c_f, 0.0);
        assert!(matches!(
            check_a3(&heat, &[(vec![1.0; 6], vec![1.0; 6])], &[0.1]),
            Err(Error::DegeneratePair(0))
        ));
    }

    #[test]
    fn model_config_round_trip() {
        let heat = DiagonalModel::heat_preset(4, 3, 0.5, 2.0).unwrap();
        let text = heat.to_config_string();
        assert_eq!(DiagonalModel::from_config_str(&text).unwrap(), heat);
        assert!(DiagonalModel::from_config_str("n=2\nbogus=1\n").is_err());
    }

    #[test]
    fn hs_matrix_basics() {
        let m = HSMatrix::from_row_major(2, 2, vec![3.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(m.hs_norm(), 5.0);
        assert_eq!(m.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
        let s = m.singular_values();
        assert_relative_eq!(s[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(s[1], 3.0, epsilon = 1e-12);
        assert!(m.apply(&[1.0]).is_err());
    }
}
