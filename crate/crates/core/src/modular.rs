//! Modulars, Luxemburg norms and the power functionals ψ, ∂ψ, ψ* on
//! variable-exponent Lebesgue spaces, discretized by the midpoint rule.
//!
//! Functions taking several fields panic when the fields live on different
//! grids, the same way array libraries treat shape mismatches.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::{conjugate_exponent, ExponentField};
use crate::field::GridFunction;
use crate::par;

const LUX_REL_TOL: f64 = 1e-14;
const LUX_MAX_ITER: usize = 200;

#[inline]
pub(crate) fn abs_pow(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(e)
    }
}

/// `(x + dx)^q - x^q` for `x >= 0`, `x + dx >= 0`, accurate to a few ulps of
/// the difference itself when `dx` is small relative to `x`.
#[inline]
pub(crate) fn pow_diff_from_delta(x: f64, dx: f64, q: f64) -> f64 {
    if x == 0.0 {
        return abs_pow(dx, q);
    }
    let r = dx / x;
    if r.abs() < 0.5 {
        x.powf(q) * (q * r.ln_1p()).exp_m1()
    } else {
        abs_pow(x + dx, q) - x.powf(q)
    }
}

/// `|a + da|^e - |a|^e`, accurate when `da` is small relative to `a`.
#[inline]
pub(crate) fn pow_abs_diff_delta(a: f64, da: f64, e: f64) -> f64 {
    let b = a + da;
    if a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0) {
        return abs_pow(b, e) - abs_pow(a, e);
    }
    pow_diff_from_delta(a.abs(), da * a.signum(), e)
}

/// `sign(v) |v|^{e-1}`, the pointwise derivative of `|v|^e / e`. Zero at the
/// origin, which is the continuous extension for every `e > 1`.
#[inline]
pub(crate) fn duality_map(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(e - 1.0)
    }
}

fn assert_same(w: &GridFunction, p: &ExponentField) {
    assert!(w.same_grid(p.grid()), "grid function and exponent live on different grids");
}

/// `weight * Σ |values_i|^{exps_i}` with a deterministic reduction order.
pub fn modular_raw(values: &[f64], exps: &[f64], weight: f64) -> f64 {
    assert_eq!(values.len(), exps.len());
    weight * par::sum_indexed(values.len(), |i| abs_pow(values[i], exps[i]))
}

/// Luxemburg norm `inf{λ > 0 : weight Σ |v_i/λ|^{e_i} <= 1}` by bisection.
///
/// The data is first scaled by its largest magnitude (the norm is absolutely
/// homogeneous), and the initial bracket comes from inverting
/// `σ⁻(‖w‖) <= ρ(w) <= σ⁺(‖w‖)`.
pub fn luxemburg_raw(values: &[f64], exps: &[f64], weight: f64) -> Result<f64> {
    assert_eq!(values.len(), exps.len());
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return Err(Error::Bracketing);
    }
    let (e_min, e_max) = exps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    // ln|v/scale| for the nonzero entries.
    let logs: Vec<(f64, f64)> = values
        .iter()
        .zip(exps)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, &e)| ((v.abs() / scale).ln(), e))
        .collect();
    let rho = |log_lambda: f64| -> f64 {
        weight * par::sum_indexed(logs.len(), |i| (logs[i].1 * (logs[i].0 - log_lambda)).exp())
    };
    let rho0 = rho(0.0);
    if !(rho0.is_finite() && rho0 > 0.0) {
        return Err(Error::Bracketing);
    }
    let (a, b) = (rho0.ln() / e_max, rho0.ln() / e_min);
    let mut lo = a.min(b) - 1e-12;
    let mut hi = a.max(b) + 1e-12;
    let mut widen = 0;
    while rho(lo) < 1.0 {
        lo -= 1e-6 * 2f64.powi(widen);
        widen += 1;
        if widen > 80 {
            return Err(Error::Bracketing);
        }
    }
    widen = 0;
    while rho(hi) > 1.0 {
        hi += 1e-6 * 2f64.powi(widen);
        widen += 1;
        if widen > 80 {
            return Err(Error::Bracketing);
        }
    }
    for _ in 0..LUX_MAX_ITER {
        // log-space width equals the relative width of the λ bracket
        if hi - lo <= LUX_REL_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(scale * (0.5 * (lo + hi)).exp())
}

/// `∫ |w|^{p(x)} dx`.
pub fn modular(w: &GridFunction, p: &ExponentField) -> f64 {
    assert_same(w, p);
    modular_raw(w.values(), p.values(), w.grid().cell_volume())
}

pub fn luxemburg_norm(w: &GridFunction, p: &ExponentField) -> Result<f64> {
    assert_same(w, p);
    luxemburg_raw(w.values(), p.values(), w.grid().cell_volume())
}

/// Norm of `w` in the dual space `L^{p'(x)}`, taken over interior cells only
/// (the boundary layer is not a degree of freedom).
pub fn dual_norm(w: &GridFunction, p: &ExponentField) -> Result<f64> {
    assert_same(w, p);
    let grid = w.grid();
    let vals: Vec<f64> = (0..w.len()).map(|i| if grid.is_boundary(i) { 0.0 } else { w.values()[i] }).collect();
    let exps: Vec<f64> = p.values().iter().map(|&e| conjugate_exponent(e)).collect();
    luxemburg_raw(&vals, &exps, grid.cell_volume())
}

/// `σ⁻(s) = min{s^{p⁻}, s^{p⁺}}`, `σ⁺(s) = max{s^{p⁻}, s^{p⁺}}`.
pub fn sigma_bounds(s: f64, p: &ExponentField) -> (f64, f64) {
    sigma_bounds_raw(s, p.p_minus(), p.p_plus())
}

pub fn sigma_bounds_raw(s: f64, p_minus: f64, p_plus: f64) -> (f64, f64) {
    let (a, b) = (s.powf(p_minus), s.powf(p_plus));
    (a.min(b), a.max(b))
}

/// Two-sided comparison carried by the standalone inequality checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖fg‖₁ <= 2 ‖f‖_{p(x)} ‖g‖_{p'(x)}`.
pub fn holder_pairing_bound(f: &GridFunction, g: &GridFunction, p: &ExponentField) -> Result<BoundCheck> {
    assert_same(f, p);
    assert_same(g, p);
    let vol = f.grid().cell_volume();
    let lhs = vol * par::sum_indexed(f.len(), |i| (f.values()[i] * g.values()[i]).abs());
    let rhs = 2.0 * luxemburg_norm(f, p)? * luxemburg_norm(g, &p.conjugate())?;
    Ok(BoundCheck { lhs, rhs, holds: lhs <= rhs + 1e-12 * rhs })
}

/// The x-independent constant `C_ε` of `ab <= ε a^{p(x)} + C_ε b^{p'(x)}`:
/// `C_ε = 1 / ((p⁺)' δ^{(p⁻)'})` with `δ = min(1, (ε p⁻)^{1/p⁻})`.
pub fn young_constant(eps: f64, p_minus: f64, p_plus: f64) -> f64 {
    let delta = (eps * p_minus).powf(1.0 / p_minus).min(1.0);
    1.0 / (conjugate_exponent(p_plus) * delta.powf(conjugate_exponent(p_minus)))
}

/// Right side `ε a^{px} + C_ε b^{px'}` of the variable-exponent Young
/// inequality, together with `C_ε`.
pub fn young_pointwise(a: f64, b: f64, px: f64, eps: f64, p_minus: f64, p_plus: f64) -> (f64, f64) {
    let c = young_constant(eps, p_minus, p_plus);
    (eps * abs_pow(a, px) + c * abs_pow(b, conjugate_exponent(px)), c)
}

/// `ψ(u) = ∫ |u|^{p(x)} / p(x) dx`.
pub fn psi(u: &GridFunction, p: &ExponentField) -> f64 {
    assert_same(u, p);
    let (v, e) = (u.values(), p.values());
    u.grid().cell_volume() * par::sum_indexed(u.len(), |i| abs_pow(v[i], e[i]) / e[i])
}

/// `∂ψ(u) = |u|^{p(x)-2} u`; the same pointwise map is the duality operator Z.
pub fn dpsi(u: &GridFunction, p: &ExponentField) -> GridFunction {
    assert_same(u, p);
    let (v, e) = (u.values(), p.values());
    GridFunction::from_raw(u.grid().clone(), par::map_indexed(u.len(), |i| duality_map(v[i], e[i])))
}

/// `ψ*(η) = ∫ |η|^{p'(x)} / p'(x) dx`, the convex conjugate of ψ.
pub fn psi_star(eta: &GridFunction, p: &ExponentField) -> f64 {
    assert_same(eta, p);
    let (v, e) = (eta.values(), p.values());
    eta.grid().cell_volume()
        * par::sum_indexed(eta.len(), |i| {
            let q = conjugate_exponent(e[i]);
            abs_pow(v[i], q) / q
        })
}

/// `‖ |v|^{p-2} v ‖_{p'(x)} <= (‖v‖_{p(x)} + 1)^{p⁺ - 1}`.
pub fn dual_norm_bound_check(v: &GridFunction, p: &ExponentField) -> Result<BoundCheck> {
    let lhs = luxemburg_norm(&dpsi(v, p), &p.conjugate())?;
    let rhs = (luxemburg_norm(v, p)? + 1.0).powf(p.p_plus() - 1.0);
    Ok(BoundCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) })
}
