//! Right-hand sides `f(x, t)`.
//!
//! The closed-form library is separable, `f(x, t) = g(x) s(t)`, so time
//! averages over `(t_{n-1}, t_n]` and the space-time integrals used by the
//! energy bounds are available in closed form (or by high-order quadrature
//! for `|s|^q` of a polynomial). A tabulated variant interpolates cellwise
//! samples linearly in time.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::{conjugate_exponent, ExponentField};
use crate::field::GridFunction;
use crate::grid::Grid;
use crate::modular::abs_pow;

/// Spatial factor `g(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceProfile {
    Zero,
    Constant { value: f64 },
    /// `amplitude · Π_k sin(π (x_k − a_k)/(b_k − a_k))`.
    SineBump { amplitude: f64 },
    /// `amplitude` where `lower ≤ x₁ ≤ upper`, zero elsewhere.
    Indicator { amplitude: f64, lower: f64, upper: f64 },
}

/// Temporal factor `s(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant,
    /// `Σ_k coeffs[k] t^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `exp(−rate · t)`.
    ExpDecay { rate: f64 },
    /// `t^{-1/2}`; `t ∂_t s` is unbounded near 0.
    InverseSqrt,
}

/// Cellwise samples at increasing times, linear in between and constant
/// outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tabulated {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    Separable { space: SpaceProfile, time: TimeProfile },
    Tabulated(Tabulated),
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];
const GL_PANELS: usize = 2048;
const TABULATED_SUBNODES: usize = 16;

/// Composite 5-point Gauss–Legendre rule on `[a, b]`.
fn gauss_legendre<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let w = (b - a) / GL_PANELS as f64;
    let mut total = 0.0;
    for k in 0..GL_PANELS {
        let mid = a + (k as f64 + 0.5) * w;
        let mut panel = 0.0;
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            panel += wt * f(mid + 0.5 * w * x);
        }
        total += 0.5 * w * panel;
    }
    total
}

impl SpaceProfile {
    fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("forcing {what} must be finite")))
            }
        };
        match *self {
            SpaceProfile::Zero => Ok(()),
            SpaceProfile::Constant { value } => finite(value, "value"),
            SpaceProfile::SineBump { amplitude } => finite(amplitude, "amplitude"),
            SpaceProfile::Indicator { amplitude, lower, upper } => {
                finite(amplitude, "amplitude")?;
                finite(lower, "lower bound")?;
                finite(upper, "upper bound")?;
                if lower < upper {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("indicator forcing needs lower < upper".into()))
                }
            }
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let x = grid.center(i);
                match *self {
                    SpaceProfile::Zero => 0.0,
                    SpaceProfile::Constant { value } => value,
                    SpaceProfile::SineBump { amplitude } => {
                        (0..grid.dim()).fold(amplitude, |acc, k| {
                            let r = (x[k] - grid.lower(k)) / (grid.upper(k) - grid.lower(k));
                            acc * (PI * r).sin()
                        })
                    }
                    SpaceProfile::Indicator { amplitude, lower, upper } => {
                        if x[0] >= lower && x[0] <= upper {
                            amplitude
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect()
    }
}

impl TimeProfile {
    fn validate(&self) -> Result<()> {
        match self {
            TimeProfile::Polynomial { coeffs } if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::InvalidArgument("polynomial forcing needs finite coefficients".into()))
            }
            TimeProfile::ExpDecay { rate } if !rate.is_finite() => {
                Err(Error::InvalidArgument("decay rate must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            TimeProfile::ExpDecay { rate } => (-rate * t).exp(),
            TimeProfile::InverseSqrt => 1.0 / t.sqrt(),
        }
    }

    /// `t · s'(t)`.
    pub fn t_derivative(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Polynomial { coeffs } => {
                coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c * t.powi(k as i32)).sum()
            }
            TimeProfile::ExpDecay { rate } => -rate * t * (-rate * t).exp(),
            TimeProfile::InverseSqrt => -0.5 / t.sqrt(),
        }
    }

    /// Exact mean of `s` over `[a, b]`, `0 ≤ a < b`.
    pub fn average(&self, a: f64, b: f64) -> f64 {
        let h = b - a;
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Polynomial { coeffs } => {
                let mut total = 0.0;
                let (mut pa, mut pb) = (a, b);
                for (k, c) in coeffs.iter().enumerate() {
                    total += c * (pb - pa) / (k as f64 + 1.0);
                    pa *= a;
                    pb *= b;
                }
                total / h
            }
            TimeProfile::ExpDecay { rate } => {
                let x = rate * h;
                if x == 0.0 {
                    1.0
                } else {
                    (-rate * a).exp() * (-(-x).exp_m1()) / x
                }
            }
            TimeProfile::InverseSqrt => 2.0 / (a.sqrt() + b.sqrt()),
        }
    }

    /// `∫_0^T |s(t)|^q dt`; infinite when not integrable.
    pub fn power_integral(&self, q: f64, t_final: f64) -> f64 {
        match self {
            TimeProfile::Constant => t_final,
            TimeProfile::ExpDecay { rate } => {
                let x = rate * q;
                if x == 0.0 {
                    t_final
                } else {
                    -(-x * t_final).exp_m1() / x
                }
            }
            TimeProfile::InverseSqrt => {
                let e = 1.0 - 0.5 * q;
                if e > 0.0 {
                    t_final.powf(e) / e
                } else {
                    f64::INFINITY
                }
            }
            TimeProfile::Polynomial { .. } => gauss_legendre(0.0, t_final, |t| abs_pow(self.eval(t), q)),
        }
    }

    /// `sup_{0 < t ≤ T} |t s'(t)|`, `None` when unbounded.
    pub fn t_derivative_sup(&self, t_final: f64) -> Option<f64> {
        match self {
            TimeProfile::Constant => Some(0.0),
            TimeProfile::InverseSqrt => None,
            TimeProfile::ExpDecay { rate } => {
                let at = |t: f64| (rate * t * (-rate * t).exp()).abs();
                if *rate > 0.0 && 1.0 / rate <= t_final {
                    Some(at(1.0 / rate))
                } else {
                    Some(at(t_final))
                }
            }
            TimeProfile::Polynomial { .. } => {
                let samples = 4096;
                Some(
                    (0..=samples)
                        .map(|k| self.t_derivative(t_final * k as f64 / samples as f64).abs())
                        .fold(0.0, f64::max),
                )
            }
        }
    }
}

impl Tabulated {
    fn validate(&self, grid: &Grid) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(Error::InvalidArgument("tabulated forcing needs one sample row per time".into()));
        }
        if self.times.windows(2).any(|w| !(w[0] < w[1])) || self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("tabulated times must be finite and increasing".into()));
        }
        for row in &self.values {
            if row.len() != grid.len() {
                return Err(Error::GridMismatch);
            }
            if let Some(cell) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { cell });
            }
        }
        Ok(())
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            (0, 0, 0.0)
        } else if k == self.times.len() {
            (k - 1, k - 1, 0.0)
        } else {
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            (k - 1, k, (t - t0) / (t1 - t0))
        }
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let (a, b, w) = self.bracket(t);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.values[a][i] + w * self.values[b][i];
        }
    }

    fn eval_cell(&self, t: f64, i: usize) -> f64 {
        let (a, b, w) = self.bracket(t);
        (1.0 - w) * self.values[a][i] + w * self.values[b][i]
    }

    fn slope(&self, t: f64, i: usize) -> f64 {
        let (a, b, _) = self.bracket(t);
        if a == b {
            0.0
        } else {
            (self.values[b][i] - self.values[a][i]) / (self.times[b] - self.times[a])
        }
    }
}

/// Admissibility of a forcing for the time-regularization estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regularity {
    pub admissible: bool,
    pub reason: Option<String>,
    /// `sup_t ∫ |t ∂_t f|^{p'}`, infinite when unbounded.
    pub sup_t_dtf_modular: f64,
    /// `∬ |t ∂_t f|^{p'}`.
    pub t_dtf_space_time: f64,
}

impl ForcingSpec {
    pub fn zero() -> Self {
        ForcingSpec::Separable { space: SpaceProfile::Zero, time: TimeProfile::Constant }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::Separable { space, .. } => match space {
                SpaceProfile::Zero => true,
                SpaceProfile::Constant { value } => *value == 0.0,
                SpaceProfile::SineBump { amplitude } | SpaceProfile::Indicator { amplitude, .. } => *amplitude == 0.0,
            },
            ForcingSpec::Tabulated(t) => t.values.iter().all(|r| r.iter().all(|v| *v == 0.0)),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            ForcingSpec::Separable { space, time } => {
                space.validate()?;
                time.validate()
            }
            ForcingSpec::Tabulated(t) => t.validate(grid),
        }
    }

    /// `f(·, t)` on the grid.
    pub fn eval(&self, grid: &Arc<Grid>, t: f64) -> Result<GridFunction> {
        self.validate(grid)?;
        match self {
            ForcingSpec::Separable { space, time } => {
                let s = time.eval(t);
                GridFunction::new(grid.clone(), space.sample(grid).into_iter().map(|g| g * s).collect())
            }
            ForcingSpec::Tabulated(tab) => {
                let mut out = vec![0.0; grid.len()];
                tab.eval(t, &mut out);
                GridFunction::new(grid.clone(), out)
            }
        }
    }

    /// Time average `(1/h) ∫_{t_{n-1}}^{t_n} f(·, θ) dθ` with `t_k = k h`.
    pub fn average(&self, grid: &Arc<Grid>, n: usize, h: f64) -> Result<GridFunction> {
        if n == 0 || !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("average needs n >= 1 and h > 0, got n = {n}, h = {h}")));
        }
        self.validate(grid)?;
        let (a, b) = ((n - 1) as f64 * h, n as f64 * h);
        match self {
            ForcingSpec::Separable { space, time } => {
                let s = time.average(a, b);
                GridFunction::new(grid.clone(), space.sample(grid).into_iter().map(|g| g * s).collect())
            }
            ForcingSpec::Tabulated(tab) => {
                let mut acc = vec![0.0; grid.len()];
                let mut row = vec![0.0; grid.len()];
                for k in 0..TABULATED_SUBNODES {
                    let t = a + (k as f64 + 0.5) * h / TABULATED_SUBNODES as f64;
                    tab.eval(t, &mut row);
                    for (s, r) in acc.iter_mut().zip(&row) {
                        *s += r / TABULATED_SUBNODES as f64;
                    }
                }
                GridFunction::new(grid.clone(), acc)
            }
        }
    }

    /// `∬_Q |f|^{p'(x)} dx dt` over `(0, T)`, midpoint in space.
    pub fn space_time_modular(&self, p: &ExponentField, t_final: f64) -> Result<f64> {
        let grid = p.grid();
        self.validate(grid)?;
        let vol = grid.cell_volume();
        match self {
            ForcingSpec::Separable { space, time } => {
                let g = space.sample(grid);
                let mut total = 0.0;
                for (i, gi) in g.iter().enumerate() {
                    if *gi != 0.0 {
                        let q = conjugate_exponent(p.get(i));
                        total += vol * abs_pow(*gi, q) * time.power_integral(q, t_final);
                    }
                }
                Ok(total)
            }
            ForcingSpec::Tabulated(tab) => {
                let total: f64 = (0..grid.len())
                    .map(|i| {
                        let q = conjugate_exponent(p.get(i));
                        vol * gauss_legendre(0.0, t_final, |t| abs_pow(tab.eval_cell(t, i), q))
                    })
                    .sum();
                Ok(total)
            }
        }
    }

    /// Checks `t ∂_t f` for boundedness in the `p'` modular on `(0, T]`.
    pub fn regularity(&self, p: &ExponentField, t_final: f64) -> Result<Regularity> {
        let grid = p.grid();
        self.validate(grid)?;
        let vol = grid.cell_volume();
        let q: Vec<f64> = p.values().iter().map(|&e| conjugate_exponent(e)).collect();
        match self {
            ForcingSpec::Separable { space, time } => {
                let g = space.sample(grid);
                if g.iter().all(|v| *v == 0.0) {
                    return Ok(Regularity { admissible: true, reason: None, sup_t_dtf_modular: 0.0, t_dtf_space_time: 0.0 });
                }
                let Some(sup) = time.t_derivative_sup(t_final) else {
                    return Ok(Regularity {
                        admissible: false,
                        reason: Some("t·∂_t f is unbounded near t = 0".into()),
                        sup_t_dtf_modular: f64::INFINITY,
                        t_dtf_space_time: f64::INFINITY,
                    });
                };
                let sup_mod: f64 = g.iter().zip(&q).map(|(gi, qi)| vol * abs_pow(gi * sup, *qi)).sum();
                let st: f64 = g
                    .iter()
                    .zip(&q)
                    .filter(|(gi, _)| **gi != 0.0)
                    .map(|(gi, qi)| vol * abs_pow(*gi, *qi) * gauss_legendre(0.0, t_final, |t| abs_pow(time.t_derivative(t), *qi)))
                    .sum();
                Ok(Regularity { admissible: true, reason: None, sup_t_dtf_modular: sup_mod, t_dtf_space_time: st })
            }
            ForcingSpec::Tabulated(tab) => {
                // Piecewise linear in t: |t ∂_t f| peaks at the right end of each segment.
                let mut sup_mod = 0.0f64;
                let mut st = 0.0;
                for i in 0..grid.len() {
                    st += vol * gauss_legendre(0.0, t_final, |t| abs_pow(t * tab.slope(t, i), q[i]));
                }
                let mut ends: Vec<f64> = tab.times.iter().copied().filter(|&t| t > 0.0 && t <= t_final).collect();
                ends.push(t_final);
                for &t in &ends {
                    let left = (t * (1.0 - 1e-12)).max(0.0);
                    let m: f64 = (0..grid.len()).map(|i| vol * abs_pow(t * tab.slope(left, i), q[i])).sum();
                    sup_mod = sup_mod.max(m);
                }
                Ok(Regularity { admissible: true, reason: None, sup_t_dtf_modular: sup_mod, t_dtf_space_time: st })
            }
        }
    }
}
