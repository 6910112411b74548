use crate::error::{invalid, Error, Result};
use crate::sampling::validate_grid;

/// Tolerance on the hypothesis inequality.
pub const HYPOTHESIS_TOL: f64 = 1e-8;
/// A margin below `-MARGIN_TOL` means the conclusion fails.
pub const MARGIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WillettWong {
    pub holds: bool,
    /// `min_k (rhs_k - lhs_k)`.
    pub margin: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

fn check_uniform(t: &[f64]) -> Result<()> {
    validate_grid(t)?;
    let h0 = t[1] - t[0];
    if t.windows(2).any(|w| ((w[1] - w[0]) - h0).abs() > 1e-9 * h0) {
        return Err(invalid("t", "grid must be uniform"));
    }
    Ok(())
}

/// Check `u(t) ≤ ∫₀ᵗ v u + ∫₀ᵗ w u^p`, then the bound
/// `u(t) e^{-∫₀ᵗ v} ≤ (q ∫₀ᵗ w e^{-q∫₀ˢ v} ds)^{1/q}`, `q = 1 - p`, at every
/// grid point, with trapezoidal integrals. For `p > 1` the right side is
/// taken as its limiting value `0`.
pub fn willet_wong_check(t: &[f64], u: &[f64], v: &[f64], w: &[f64], p: f64) -> Result<WillettWong> {
    check_uniform(t)?;
    let n = t.len();
    for (name, f) in [("u", u), ("v", v), ("w", w)] {
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.len(),
            });
        }
        if f.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid(name, "must be finite and nonnegative"));
        }
    }
    if !(p >= 0.0) || p == 1.0 {
        return Err(invalid("p", "need p >= 0 and p != 1"));
    }

    let integrand: Vec<f64> = (0..n).map(|i| v[i] * u[i] + w[i] * u[i].powf(p)).collect();
    let hyp = cumulative_trapezoid(t, &integrand);
    for (i, (ui, hi)) in u.iter().zip(&hyp).enumerate() {
        if ui - hi > HYPOTHESIS_TOL {
            return Err(Error::HypothesisFailed {
                index: i,
                excess: ui - hi,
            });
        }
    }

    let q = 1.0 - p;
    let big_v = cumulative_trapezoid(t, v);
    let lhs: Vec<f64> = u.iter().zip(&big_v).map(|(ui, vi)| ui * (-vi).exp()).collect();
    let rhs: Vec<f64> = if q > 0.0 {
        let g: Vec<f64> = w.iter().zip(&big_v).map(|(wi, vi)| wi * (-q * vi).exp()).collect();
        cumulative_trapezoid(t, &g)
            .iter()
            .map(|x| (q * x).powf(1.0 / q))
            .collect()
    } else {
        vec![0.0; n]
    };
    let margin = rhs.iter().zip(&lhs).map(|(r, l)| r - l).fold(f64::INFINITY, f64::min);
    Ok(WillettWong {
        holds: margin >= -MARGIN_TOL,
        margin,
        lhs,
        rhs,
    })
}

/// Largest grid function with `u_k = trapezoid ∫₀^{t_k} (v u + w u^p)`,
/// `u_0 = 0`, for `p ∈ [0, 1)`. Each step takes the largest root of its
/// implicit scalar equation, rounded down so the hypothesis holds.
pub fn maximal_solution(t: &[f64], v: &[f64], w: &[f64], p: f64) -> Result<Vec<f64>> {
    check_uniform(t)?;
    if !(0.0..1.0).contains(&p) {
        return Err(invalid("p", "maximal solution needs p in [0, 1)"));
    }
    let mut u = vec![0.0; t.len()];
    for k in 1..t.len() {
        let h = t[k] - t[k - 1];
        let known = u[k - 1] + 0.5 * h * (v[k - 1] * u[k - 1] + w[k - 1] * u[k - 1].powf(p));
        let (a, b) = (0.5 * h * v[k], 0.5 * h * w[k]);
        if a >= 1.0 {
            return Err(invalid("t", "step too large for the implicit trapezoid step"));
        }
        let g = |x: f64| known + a * x + b * x.powf(p) - x;
        let mut hi = (known + b).max(1e-300);
        while g(hi) > 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        u[k] = lo;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::uniform_grid;

    #[test]
    fn zero_function_holds() {
        let t = uniform_grid(1.0, 100);
        let r = willet_wong_check(&t, &vec![0.0; 101], &vec![0.3; 101], &vec![1.0; 101], 0.5).unwrap();
        assert!(r.holds);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn near_equality_instance() {
        let m = 10_000;
        let t = uniform_grid(1.0, m);
        let u: Vec<f64> = t.iter().map(|s| s * s / 4.0).collect();
        let r = willet_wong_check(&t, &u, &vec![0.0; m + 1], &vec![1.0; m + 1], 0.5).unwrap();
        assert!(r.holds && r.margin.abs() < 1e-4, "{}", r.margin);
    }

    #[test]
    fn exponential_violates_hypothesis() {
        let t = uniform_grid(1.0, 1000);
        let u: Vec<f64> = t.iter().map(|s| (10.0 * s).exp()).collect();
        assert!(matches!(
            willet_wong_check(&t, &u, &vec![0.0; 1001], &vec![1.0; 1001], 0.5),
            Err(Error::HypothesisFailed { .. })
        ));
    }

    #[test]
    fn maximal_solution_of_square_root_equation() {
        let t = uniform_grid(1.0, 1000);
        let u = maximal_solution(&t, &vec![0.0; 1001], &vec![1.0; 1001], 0.5).unwrap();
        for (ui, s) in u.iter().zip(&t) {
            assert!((ui - s * s / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn superlinear_power_has_zero_bound() {
        let t = uniform_grid(1.0, 10);
        let r = willet_wong_check(&t, &[0.0; 11], &[1.0; 11], &[1.0; 11], 2.0).unwrap();
        assert!(r.rhs.iter().all(|x| *x == 0.0) && r.holds);
    }
}
