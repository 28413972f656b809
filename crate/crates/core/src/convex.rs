//! Inner convex minimization and the modified proximal family.
//!
//! All per-step problems of the time scheme and all resolvent evaluations
//! minimize a composite
//!
//! ```text
//! J(x) = s·ψ((x − c)/s) + φ(x) − ⟨ℓ, x⟩
//! ```
//!
//! with ψ the p(x)-power functional and φ the m(x)-Dirichlet energy. The
//! modified resolvent uses `s = λ`, `c = u`, `ℓ = 0`; a time step uses
//! `s = h`, `c = u_n`, `ℓ = f_{n+1}`.

use std::sync::Arc;

use serde::Serialize;

use crate::energy::DirichletEnergy;
use crate::error::{Error, Result};
use crate::exponent::{conjugate_exponent, ExponentField};
use crate::field::GridFunction;
use crate::grid::Grid;
use crate::modular::{abs_pow, duality_map, luxemburg_raw, modular_raw, pow_abs_diff_delta};
use crate::par;

/// Solver settings shared by every minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxConfig {
    /// Bound on the dual Luxemburg norm of the gradient, relative to `1 + data norm`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Armijo sufficient-decrease fraction.
    pub armijo: f64,
    /// Step shrink factor on a failed Armijo test.
    pub backtrack: f64,
    /// Flux regularization of φ; see [`crate::energy`].
    pub eps_reg: f64,
    /// Propose inexact Newton directions where the objective supplies a
    /// linearization. Steps are still accepted by the same Armijo test.
    pub newton: bool,
}

impl Default for ProxConfig {
    fn default() -> Self {
        ProxConfig { tolerance: 1e-9, max_iterations: 10_000, armijo: 1e-4, backtrack: 0.5, eps_reg: 0.0, newton: true }
    }
}

impl ProxConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive and finite");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.eps_reg >= 0.0 && self.eps_reg.is_finite()) {
            return bad("eps_reg must be finite and non-negative");
        }
        Ok(())
    }

    /// Copy with `eps_reg` set to the default for `m`.
    pub fn with_default_eps(mut self, m: &ExponentField) -> Self {
        self.eps_reg = crate::energy::default_eps_reg(m);
        self
    }
}

/// A smooth convex function on a weighted `R^n` with some coordinates
/// frozen. Gradients are Riesz representatives with respect to
/// `⟨a, b⟩ = Σ weight(i) a_i b_i`.
pub trait Objective: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn weight(&self, i: usize) -> f64;
    fn is_free(&self, i: usize) -> bool;
    /// Exponent of the dual modular used to measure the gradient at `i`.
    fn dual_exponent(&self, i: usize) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// `value(b) - value(a)`.
    fn delta(&self, a: &[f64], b: &[f64]) -> f64 {
        self.value(b) - self.value(a)
    }
    /// Size of the data, used to make the tolerance relative.
    fn data_norm(&self) -> f64;
    /// Derivative of the gradient map at `x`, if available.
    fn linearize(&self, _x: &[f64]) -> Option<Linearization> {
        None
    }
}

/// Symmetric operator `v ↦ diag ⊙ v + Σ_e w_e (v_i − v_j)(e_i − e_j)`: a
/// diagonal plus a weighted graph Laplacian.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Linearization {
    pub diag: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Linearization {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for &(i, j, w) in &self.edges {
            let t = w * (v[i] - v[j]);
            out[i] += t;
            out[j] -= t;
        }
        out
    }

    fn jacobi(&self) -> Vec<f64> {
        let mut d = self.diag.clone();
        for &(i, j, w) in &self.edges {
            d[i] += w;
            d[j] += w;
        }
        d
    }

    fn append(&mut self, other: Linearization) {
        let off = self.diag.len();
        self.diag.extend(other.diag);
        self.edges.extend(other.edges.into_iter().map(|(i, j, w)| (i + off, j + off, w)));
    }
}

/// `scale·ψ((x − shift)/scale) + φ_ε(x) − ⟨linear, x⟩` on one grid.
#[derive(Debug, Clone)]
pub struct CompositeObjective {
    grid: Arc<Grid>,
    p: Vec<f64>,
    p_dual: Vec<f64>,
    energy: DirichletEnergy,
    scale: f64,
    shift: Vec<f64>,
    linear: Option<Vec<f64>>,
    data_norm: f64,
}

impl CompositeObjective {
    pub fn new(
        p: &ExponentField,
        m: &ExponentField,
        scale: f64,
        shift: &GridFunction,
        linear: Option<&GridFunction>,
        eps_reg: f64,
    ) -> Result<Self> {
        let grid = p.grid().clone();
        if !Arc::ptr_eq(&grid, m.grid()) && **m.grid() != *grid {
            return Err(Error::GridMismatch);
        }
        shift.check_grid(&grid)?;
        if let Some(l) = linear {
            l.check_grid(&grid)?;
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        let mut obj = CompositeObjective {
            p: p.values().to_vec(),
            p_dual: p.values().iter().map(|&e| conjugate_exponent(e)).collect(),
            energy: DirichletEnergy::new(m, eps_reg),
            scale,
            shift: shift.values().to_vec(),
            linear: linear.map(|l| l.values().to_vec()),
            data_norm: 0.0,
            grid,
        };
        let g0 = obj.gradient(&vec![0.0; obj.len()]);
        obj.data_norm = dual_norm_masked(&obj, &g0)?;
        Ok(obj)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
}

impl Objective for CompositeObjective {
    fn len(&self) -> usize {
        self.p.len()
    }

    fn weight(&self, _i: usize) -> f64 {
        self.grid.cell_volume()
    }

    fn is_free(&self, i: usize) -> bool {
        !self.grid.is_boundary(i)
    }

    fn dual_exponent(&self, i: usize) -> f64 {
        self.p_dual[i]
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = self.scale;
        let psi = par::sum_indexed(x.len(), |i| abs_pow((x[i] - self.shift[i]) / s, self.p[i]) / self.p[i]);
        let lin = match &self.linear {
            Some(l) => par::sum_indexed(x.len(), |i| l[i] * x[i]),
            None => 0.0,
        };
        self.grid.cell_volume() * (s * psi - lin) + self.energy.value(x)
    }

    fn delta(&self, a: &[f64], b: &[f64]) -> f64 {
        let s = self.scale;
        let psi = par::sum_indexed(a.len(), |i| {
            pow_abs_diff_delta((a[i] - self.shift[i]) / s, (b[i] - a[i]) / s, self.p[i]) / self.p[i]
        });
        let lin = match &self.linear {
            Some(l) => par::sum_indexed(a.len(), |i| l[i] * (b[i] - a[i])),
            None => 0.0,
        };
        self.grid.cell_volume() * (s * psi - lin) + self.energy.delta(a, b)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.energy.gradient(x);
        let s = self.scale;
        for (i, gi) in g.iter_mut().enumerate() {
            *gi += duality_map((x[i] - self.shift[i]) / s, self.p[i]);
            if let Some(l) = &self.linear {
                *gi -= l[i];
            }
        }
        g
    }

    fn data_norm(&self) -> f64 {
        self.data_norm
    }

    fn linearize(&self, x: &[f64]) -> Option<Linearization> {
        let s = self.scale;
        let ys: Vec<f64> = x.iter().zip(&self.shift).map(|(a, c)| (a - c) / s).collect();
        let floor = 1e-8 * ys.iter().fold(1.0f64, |a, y| a.max(y.abs()));
        let diag = ys
            .iter()
            .zip(&self.p)
            .map(|(&y, &p)| {
                let k = if p == 2.0 {
                    1.0
                } else if p > 2.0 {
                    (p - 1.0) * abs_pow(y, p - 2.0)
                } else {
                    (p - 1.0) * y.abs().max(floor).powf(p - 2.0)
                };
                k / s
            })
            .collect();
        Some(Linearization { diag, edges: self.energy.edge_weights(x) })
    }
}

/// Several objectives on disjoint blocks of one vector, summed with
/// positive weights: `F(x_1, …, x_K) = Σ c_k F_k(x_k)`.
pub struct WeightedSum<O> {
    parts: Vec<O>,
    coeffs: Vec<f64>,
    block: usize,
}

impl<O: Objective> WeightedSum<O> {
    pub fn new(parts: Vec<O>, coeffs: Vec<f64>) -> Result<Self> {
        if parts.is_empty() || parts.len() != coeffs.len() {
            return Err(Error::InvalidArgument("weighted sum needs one positive coefficient per part".into()));
        }
        if coeffs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument("weighted sum coefficients must be positive".into()));
        }
        let block = parts[0].len();
        if parts.iter().any(|p| p.len() != block) {
            return Err(Error::InvalidArgument("weighted sum parts must have equal length".into()));
        }
        Ok(WeightedSum { parts, coeffs, block })
    }

    fn split(&self, i: usize) -> (usize, usize) {
        (i / self.block, i % self.block)
    }
}

impl<O: Objective> Objective for WeightedSum<O> {
    fn len(&self) -> usize {
        self.block * self.parts.len()
    }

    fn weight(&self, i: usize) -> f64 {
        let (k, j) = self.split(i);
        self.coeffs[k] * self.parts[k].weight(j)
    }

    fn is_free(&self, i: usize) -> bool {
        let (k, j) = self.split(i);
        self.parts[k].is_free(j)
    }

    fn dual_exponent(&self, i: usize) -> f64 {
        let (k, j) = self.split(i);
        self.parts[k].dual_exponent(j)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.parts
            .iter()
            .zip(&self.coeffs)
            .zip(x.chunks(self.block))
            .map(|((p, c), xk)| c * p.value(xk))
            .sum()
    }

    fn delta(&self, a: &[f64], b: &[f64]) -> f64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let r = k * self.block..(k + 1) * self.block;
                self.coeffs[k] * p.delta(&a[r.clone()], &b[r])
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.parts.iter().zip(x.chunks(self.block)).flat_map(|(p, xk)| p.gradient(xk)).collect()
    }

    fn data_norm(&self) -> f64 {
        self.parts.iter().map(|p| p.data_norm()).fold(0.0, f64::max)
    }

    fn linearize(&self, x: &[f64]) -> Option<Linearization> {
        let mut lin = Linearization::default();
        for (p, xk) in self.parts.iter().zip(x.chunks(self.block)) {
            lin.append(p.linearize(xk)?);
        }
        Some(lin)
    }
}

fn masked<O: Objective>(obj: &O, g: &[f64]) -> Vec<f64> {
    (0..g.len()).map(|i| if obj.is_free(i) { g[i] } else { 0.0 }).collect()
}

fn weighted_inner<O: Objective>(obj: &O, a: &[f64], b: &[f64]) -> f64 {
    par::sum_indexed(a.len(), |i| obj.weight(i) * a[i] * b[i])
}

fn dual_modular<O: Objective>(obj: &O, g: &[f64], scale: f64) -> f64 {
    par::sum_indexed(g.len(), |i| obj.weight(i) * abs_pow(g[i] / scale, obj.dual_exponent(i)))
}

/// Dual Luxemburg norm of a gradient over the free coordinates.
pub fn dual_norm_masked<O: Objective>(obj: &O, g: &[f64]) -> Result<f64> {
    let n = g.len();
    let vals = masked(obj, g);
    let exps: Vec<f64> = (0..n).map(|i| obj.dual_exponent(i)).collect();
    let w0 = obj.weight(0);
    if (0..n).all(|i| obj.weight(i) == w0) {
        return luxemburg_raw(&vals, &exps, w0);
    }
    // Fold non-uniform weights into the values: w|g|^q = |w^{1/q} g|^q.
    let scaled: Vec<f64> = (0..n).map(|i| (obj.weight(i) / w0).powf(1.0 / exps[i]) * vals[i]).collect();
    luxemburg_raw(&scaled, &exps, w0)
}

/// Raw result of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Truncated preconditioned conjugate gradients for `K d = −g` on the free
/// coordinates, in the objective's weighted inner product.
fn newton_direction<O: Objective>(obj: &O, lin: &Linearization, g: &[f64], forcing: f64) -> Option<Vec<f64>> {
    let n = g.len();
    let free: Vec<bool> = (0..n).map(|i| obj.is_free(i)).collect();
    let w: Vec<f64> = (0..n).map(|i| obj.weight(i)).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { (0..n).filter(|&i| free[i]).map(|i| w[i] * a[i] * b[i]).sum() };
    let jac = lin.jacobi();
    let precond = |r: &[f64]| -> Vec<f64> {
        (0..n).map(|i| if free[i] && jac[i] > 0.0 { r[i] / jac[i] } else if free[i] { r[i] } else { 0.0 }).collect()
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = lin.apply(v);
        for i in 0..n {
            if !free[i] {
                out[i] = 0.0;
            }
        }
        out
    };
    let mut d = vec![0.0; n];
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return None;
    }
    let mut z = precond(&r);
    let mut q = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = (2 * n).clamp(50, 2000);
    for _ in 0..max_iter {
        let kq = apply(&q);
        let curv = dot(&q, &kq);
        if !(curv > 0.0) || !curv.is_finite() {
            break;
        }
        let a = rz / curv;
        for i in 0..n {
            d[i] += a * q[i];
            r[i] -= a * kq[i];
        }
        if dot(&r, &r).sqrt() <= forcing * r0 {
            break;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let b = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            q[i] = z[i] + b * q[i];
        }
    }
    if d.iter().all(|v| *v == 0.0) || d.iter().any(|v| !v.is_finite()) {
        None
    } else {
        Some(d)
    }
}

/// Armijo backtracking along `d` from `x`. Returns the accepted point.
fn line_search<O: Objective>(obj: &O, x: &[f64], d: &[f64], slope: f64, step0: f64, cfg: &ProxConfig) -> Option<(Vec<f64>, f64)> {
    let mut step = step0;
    let mut trial = vec![0.0; x.len()];
    for _ in 0..200 {
        for i in 0..x.len() {
            trial[i] = x[i] + step * d[i];
        }
        let dv = obj.delta(x, &trial);
        if dv.is_finite() && dv <= cfg.armijo * step * slope {
            return Some((trial, step));
        }
        step *= cfg.backtrack;
        if step == 0.0 {
            break;
        }
    }
    None
}

/// Monotone descent with Armijo backtracking. Directions are inexact Newton
/// steps when the objective can be linearized (and `cfg.newton` is set),
/// otherwise negative gradients scaled by the Barzilai–Borwein step. Frozen
/// coordinates keep their starting values. Stops once the dual modular of
/// `gradient / (tol·(1 + data_norm))` is at most 1, which is the same as the
/// dual Luxemburg norm being at most `tol·(1 + data_norm)`.
pub fn minimize<O: Objective>(obj: &O, start: Vec<f64>, cfg: &ProxConfig) -> Result<RawOutcome> {
    cfg.validate()?;
    let n = obj.len();
    if start.len() != n {
        return Err(Error::InvalidArgument(format!("start has {} entries, objective {}", start.len(), n)));
    }
    if let Some(cell) = start.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { cell });
    }
    let target = cfg.tolerance * (1.0 + obj.data_norm());
    let mut x = start;
    let mut g = masked(obj, &obj.gradient(&x));
    let mut alpha = {
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax > 0.0 {
            1.0 / gmax
        } else {
            1.0
        }
    };
    let mut iterations = 0;
    loop {
        if dual_modular(obj, &g, target) <= 1.0 {
            break;
        }
        if iterations >= cfg.max_iterations {
            let residual = dual_norm_masked(obj, &g)?;
            return Err(Error::NonConvergence { iterations, residual });
        }
        iterations += 1;
        let gg = weighted_inner(obj, &g, &g);
        let mut accepted = None;
        if cfg.newton {
            if let Some(lin) = obj.linearize(&x) {
                let forcing = (gg.sqrt() / (1.0 + obj.data_norm())).sqrt().min(0.1);
                if let Some(d) = newton_direction(obj, &lin, &g, forcing) {
                    let slope = weighted_inner(obj, &g, &d);
                    if slope < 0.0 {
                        accepted = line_search(obj, &x, &d, slope, 1.0, cfg);
                    }
                }
            }
        }
        if accepted.is_none() {
            let d: Vec<f64> = g.iter().map(|v| -v).collect();
            accepted = line_search(obj, &x, &d, -gg, alpha, cfg);
        }
        let Some((trial, _)) = accepted else {
            // No representable decrease: optimal to working precision while
            // the gradient test is still unmet.
            let residual = dual_norm_masked(obj, &g)?;
            return Err(Error::NonConvergence { iterations, residual });
        };
        let g_new = masked(obj, &obj.gradient(&trial));
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = trial[i] - x[i];
            let y = g_new[i] - g[i];
            ss += obj.weight(i) * s * s;
            sy += obj.weight(i) * s * y;
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { alpha * 2.0 };
        x = trial;
        g = g_new;
    }
    let residual = dual_norm_masked(obj, &g)?;
    let value = obj.value(&x);
    if !value.is_finite() {
        return Err(Error::NonFinite { cell: x.iter().position(|v| !v.is_finite()).unwrap_or(0) });
    }
    Ok(RawOutcome { x, value, residual, relative_residual: residual / (1.0 + obj.data_norm()), iterations })
}

/// Result of a converged minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub minimizer: GridFunction,
    pub value: f64,
    /// Dual Luxemburg norm of the gradient at the minimizer.
    pub residual: f64,
    /// `residual / (1 + data norm)`; at most the configured tolerance.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize a composite objective starting from `start`. Boundary cells of
/// `start` are reset to 0.
pub fn minimize_convex(objective: &CompositeObjective, start: &GridFunction, cfg: &ProxConfig) -> Result<MinimizeOutcome> {
    start.check_grid(objective.grid())?;
    let grid = objective.grid().clone();
    let x0 = start.interior().into_values();
    let out = minimize(objective, x0, cfg)?;
    Ok(MinimizeOutcome {
        minimizer: GridFunction::from_raw(grid, out.x),
        value: out.value,
        residual: out.residual,
        relative_residual: out.relative_residual,
        iterations: out.iterations,
        converged: true,
    })
}

/// Everything produced by one modified resolvent evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxPoint {
    /// `J_λ u`.
    pub resolvent: GridFunction,
    /// `A_λ u = Z((u − J_λ u)/λ)`.
    pub yosida: GridFunction,
    /// `φ_λ(u) = λψ((J_λu − u)/λ) + φ(J_λu)`.
    pub envelope: f64,
    /// `φ(J_λ u)`.
    pub phi_resolvent: f64,
    pub residual: f64,
}

/// Evaluate `J_λ u`, `A_λ u` and `φ_λ(u)` with one minimization.
pub fn prox(u: &GridFunction, lambda: f64, p: &ExponentField, m: &ExponentField, cfg: &ProxConfig) -> Result<ProxPoint> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let obj = CompositeObjective::new(p, m, lambda, u, None, cfg.eps_reg)?;
    let out = minimize_convex(&obj, u, cfg)?;
    let j = out.minimizer;
    let diff = u.sub(&j).scale(1.0 / lambda);
    let yosida = crate::modular::dpsi(&diff, p);
    let phi_resolvent = DirichletEnergy::new(m, cfg.eps_reg).value(j.values());
    let w = p.values();
    let psi = diff.grid().cell_volume() * par::sum_indexed(diff.len(), |i| abs_pow(diff.values()[i], w[i]) / w[i]);
    Ok(ProxPoint { envelope: lambda * psi + phi_resolvent, phi_resolvent, yosida, resolvent: j, residual: out.residual })
}

/// Modified resolvent `J_λ u`: the solution of `Z((v − u)/λ) + ∂φ(v) ∋ 0`.
pub fn resolvent(u: &GridFunction, lambda: f64, p: &ExponentField, m: &ExponentField, cfg: &ProxConfig) -> Result<GridFunction> {
    Ok(prox(u, lambda, p, m, cfg)?.resolvent)
}

/// Modified Yosida approximation `A_λ u = Z((u − J_λu)/λ)`.
pub fn yosida(u: &GridFunction, lambda: f64, p: &ExponentField, m: &ExponentField, cfg: &ProxConfig) -> Result<GridFunction> {
    Ok(prox(u, lambda, p, m, cfg)?.yosida)
}

/// Modified Moreau–Yosida envelope
/// `φ_λ(u) = min_v λ∫|(v − u)/λ|^{p(x)}/p(x) + φ(v)`.
pub fn moreau_yosida_value(u: &GridFunction, lambda: f64, p: &ExponentField, m: &ExponentField, cfg: &ProxConfig) -> Result<f64> {
    Ok(prox(u, lambda, p, m, cfg)?.envelope)
}

/// `Σ_k c_k φ_λ(u_k)` computed by one joint minimization over all slices.
pub fn joint_envelope(
    slices: &[GridFunction],
    coeffs: &[f64],
    lambda: f64,
    p: &ExponentField,
    m: &ExponentField,
    cfg: &ProxConfig,
) -> Result<f64> {
    let parts = slices
        .iter()
        .map(|u| CompositeObjective::new(p, m, lambda, u, None, cfg.eps_reg))
        .collect::<Result<Vec<_>>>()?;
    let obj = WeightedSum::new(parts, coeffs.to_vec())?;
    let start: Vec<f64> = slices.iter().flat_map(|u| u.interior().into_values()).collect();
    let out = minimize(&obj, start, cfg)?;
    let block = p.grid().len();
    let energy = DirichletEnergy::new(m, cfg.eps_reg);
    let w = p.values();
    let vol = p.grid().cell_volume();
    let mut total = 0.0;
    for (k, u) in slices.iter().enumerate() {
        let v = &out.x[k * block..(k + 1) * block];
        let psi = vol * par::sum_indexed(block, |i| abs_pow((v[i] - u.values()[i]) / lambda, w[i]) / w[i]);
        total += coeffs[k] * (lambda * psi + energy.value(v));
    }
    Ok(total)
}

/// Modular of a gradient-like vector in the dual exponent, exposed for reports.
pub fn dual_modular_of(g: &GridFunction, p: &ExponentField) -> f64 {
    let q: Vec<f64> = p.values().iter().map(|&e| conjugate_exponent(e)).collect();
    modular_raw(g.values(), &q, g.grid().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::dphi;
    use crate::exponent::ExponentSpec;
    use crate::modular::{dpsi, dual_norm};

    fn setup(n: usize, p: f64, m: f64) -> (Arc<Grid>, ExponentField, ExponentField) {
        let g = Arc::new(Grid::new_1d(n, 0.0, 1.0).unwrap());
        let pe = ExponentField::constant(&g, p).unwrap();
        let me = ExponentField::constant(&g, m).unwrap();
        (g, pe, me)
    }

    #[test]
    fn zero_data_gives_zero() {
        let (g, p, m) = setup(12, 1.7, 2.4);
        let z = GridFunction::zeros(&g);
        let obj = CompositeObjective::new(&p, &m, 0.1, &z, None, 0.0).unwrap();
        let out = minimize_convex(&obj, &z, &ProxConfig::default()).unwrap();
        assert!(out.minimizer.is_zero());
        assert_eq!(out.value, 0.0);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn resolvent_residual_is_small() {
        let g = Arc::new(Grid::new_1d(24, 0.0, 1.0).unwrap());
        let p = ExponentSpec::SineBump { base: 2.5, amplitude: 0.4 }.sample(&g).unwrap();
        let m = ExponentSpec::Ramp { base: 2.0, slope: 0.5 }.sample(&g).unwrap();
        let u = GridFunction::from_fn_dirichlet(&g, |x| (3.0 * x[0]).sin() * x[0]).unwrap();
        let cfg = ProxConfig::default();
        for lambda in [1.0, 0.1, 0.01] {
            let pp = prox(&u, lambda, &p, &m, &cfg).unwrap();
            let r = dpsi(&pp.resolvent.sub(&u).scale(1.0 / lambda), &p).add(&dphi(&pp.resolvent, &m, 0.0));
            assert!(dual_norm(&r, &p).unwrap() <= 1e-8 * (1.0 + dual_norm(&dpsi(&u.scale(1.0 / lambda), &p), &p).unwrap()));
            assert!(pp.phi_resolvent <= pp.envelope);
            assert!(pp.envelope <= crate::energy::phi(&u, &m) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sub_quadratic_exponents_converge() {
        let (g, p, m) = setup(32, 1.5, 1.6);
        let u = GridFunction::from_fn_dirichlet(&g, |x| (std::f64::consts::PI * x[0]).sin()).unwrap();
        let cfg = ProxConfig::default().with_default_eps(&m);
        let out = prox(&u, 0.05, &p, &m, &cfg).unwrap();
        assert!(out.envelope.is_finite());
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = ProxConfig { backtrack: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ProxConfig { tolerance: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
