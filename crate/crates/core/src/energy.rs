//! The discrete m(x)-Dirichlet energy
//!
//! ```text
//! φ(u) = Σ_faces |D_f u|^{m_f} / m_f · |cell|
//! ```
//!
//! where `D_f u` is the forward difference across face `f` and `m_f` the mean
//! of the exponents of the two adjacent cells. Its gradient with respect to
//! the discrete L² pairing is `−div(|Du|^{m-2} Du)`, the exact adjoint of the
//! forward difference, so `⟨dphi(u), v⟩` is the directional derivative of φ
//! by construction. In two dimensions each face contributes separately (the
//! energy is a sum over x- and y-faces).
//!
//! A regularization `eps_reg > 0` replaces `|s|^m / m` by
//! `((s² + ε²)^{m/2} − ε^m) / m`, which smooths the flux at degenerate faces
//! when m < 2. Value and gradient always use the same ε.

use std::sync::Arc;

use crate::error::Result;
use crate::exponent::ExponentField;
use crate::field::GridFunction;
use crate::grid::Grid;
use crate::modular::{abs_pow, duality_map, luxemburg_raw, pow_abs_diff_delta, pow_diff_from_delta};
use crate::par;

/// Forward differences on every face, one vector per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    grid: Arc<Grid>,
    axes: Vec<Vec<f64>>,
}

impl GradientField {
    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Luxemburg norm of `|∇u|` with face exponents taken from `m`.
    pub fn luxemburg_norm(&self, m: &ExponentField) -> Result<f64> {
        let mut vals = Vec::new();
        let mut exps = Vec::new();
        for axis in 0..self.grid.dim() {
            vals.extend_from_slice(&self.axes[axis]);
            exps.extend(m.face_values(axis));
        }
        luxemburg_raw(&vals, &exps, self.grid.cell_volume())
    }
}

pub fn grad(u: &GridFunction) -> GradientField {
    let grid = u.grid().clone();
    let v = u.values();
    let axes = (0..grid.dim())
        .map(|axis| {
            let h = grid.spacing(axis);
            par::map_indexed(grid.faces(axis), |f| {
                let (lo, hi) = grid.face_cells(axis, f);
                (v[hi] - v[lo]) / h
            })
        })
        .collect();
    GradientField { grid, axes }
}

/// Face-sampled φ with a fixed regularization; reused across many
/// evaluations by the minimizer.
#[derive(Debug, Clone)]
pub struct DirichletEnergy {
    grid: Arc<Grid>,
    face_exps: Vec<Vec<f64>>,
    eps: f64,
}

impl DirichletEnergy {
    pub fn new(m: &ExponentField, eps_reg: f64) -> Self {
        assert!(eps_reg >= 0.0 && eps_reg.is_finite(), "eps_reg must be a finite non-negative number");
        let grid = m.grid().clone();
        let face_exps = (0..grid.dim()).map(|a| m.face_values(a)).collect();
        DirichletEnergy { grid, face_exps, eps: eps_reg }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    fn diff(&self, v: &[f64], axis: usize, f: usize) -> f64 {
        let (lo, hi) = self.grid.face_cells(axis, f);
        (v[hi] - v[lo]) / self.grid.spacing(axis)
    }

    #[inline]
    fn density(&self, s: f64, m: f64) -> f64 {
        if self.eps == 0.0 {
            abs_pow(s, m) / m
        } else {
            let e2 = self.eps * self.eps;
            pow_diff_from_delta(e2, s * s, 0.5 * m) / m
        }
    }

    #[inline]
    fn flux(&self, s: f64, m: f64) -> f64 {
        if self.eps == 0.0 {
            duality_map(s, m)
        } else {
            (s * s + self.eps * self.eps).powf(0.5 * m - 1.0) * s
        }
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        let mut total = 0.0;
        for axis in 0..self.grid.dim() {
            let exps = &self.face_exps[axis];
            total += par::sum_indexed(exps.len(), |f| self.density(self.diff(v, axis, f), exps[f]));
        }
        total * self.grid.cell_volume()
    }

    /// `value(b) - value(a)`, accurate even when the two are nearly equal.
    /// Face increments are formed from the cellwise displacement `b - a`,
    /// which is exact for nearby points.
    pub fn delta(&self, a: &[f64], b: &[f64]) -> f64 {
        let e2 = self.eps * self.eps;
        let mut total = 0.0;
        for axis in 0..self.grid.dim() {
            let exps = &self.face_exps[axis];
            let h = self.grid.spacing(axis);
            total += par::sum_indexed(exps.len(), |f| {
                let (lo, hi) = self.grid.face_cells(axis, f);
                let sa = (a[hi] - a[lo]) / h;
                let ds = ((b[hi] - a[hi]) - (b[lo] - a[lo])) / h;
                let m = exps[f];
                if self.eps == 0.0 {
                    pow_abs_diff_delta(sa, ds, m) / m
                } else {
                    pow_diff_from_delta(sa * sa + e2, ds * (2.0 * sa + ds), 0.5 * m) / m
                }
            });
        }
        total * self.grid.cell_volume()
    }

    /// Fluxes `ρ(|D u|) D u` on every face, per axis.
    fn fluxes(&self, v: &[f64]) -> Vec<Vec<f64>> {
        (0..self.grid.dim())
            .map(|axis| {
                let exps = &self.face_exps[axis];
                par::map_indexed(exps.len(), |f| self.flux(self.diff(v, axis, f), exps[f]))
            })
            .collect()
    }

    /// Linearization of the flux on every face as `(lo, hi, weight)` with
    /// `weight = ∂flux/∂D / h²`. Slopes are floored relative to the largest
    /// one so exponents below 2 give large but finite weights.
    pub(crate) fn edge_weights(&self, v: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for axis in 0..self.grid.dim() {
            let exps = &self.face_exps[axis];
            let h = self.grid.spacing(axis);
            let diffs: Vec<f64> = (0..exps.len()).map(|f| self.diff(v, axis, f)).collect();
            let floor = 1e-8 * diffs.iter().fold(1.0f64, |a, d| a.max(d.abs()));
            for (f, &d) in diffs.iter().enumerate() {
                let m = exps[f];
                let slope = if self.eps == 0.0 {
                    let a = d.abs();
                    if m == 2.0 {
                        1.0
                    } else if m > 2.0 {
                        (m - 1.0) * abs_pow(a, m - 2.0)
                    } else {
                        (m - 1.0) * a.max(floor).powf(m - 2.0)
                    }
                } else {
                    let e2 = self.eps * self.eps;
                    (d * d + e2).powf(0.5 * m - 2.0) * ((m - 1.0) * d * d + e2)
                };
                let (lo, hi) = self.grid.face_cells(axis, f);
                out.push((lo, hi, slope / (h * h)));
            }
        }
        out
    }

    /// L²-gradient `−div(ρ(|Du|) Du)` evaluated on every cell.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let fluxes = self.fluxes(v);
        let grid = &self.grid;
        par::map_indexed(grid.len(), |i| {
            let mut acc = 0.0;
            for (axis, fl) in fluxes.iter().enumerate() {
                let h = grid.spacing(axis);
                if let Some(f) = grid.face_below(axis, i) {
                    acc += fl[f] / h;
                }
                if let Some(f) = grid.face_above(axis, i) {
                    acc -= fl[f] / h;
                }
            }
            acc
        })
    }

    /// `Σ_faces ρ(|Du|) |Du|² · |cell|`, which equals `⟨gradient(u), u⟩`.
    pub fn flux_pairing(&self, v: &[f64]) -> f64 {
        let mut total = 0.0;
        for axis in 0..self.grid.dim() {
            let exps = &self.face_exps[axis];
            total += par::sum_indexed(exps.len(), |f| {
                let s = self.diff(v, axis, f);
                self.flux(s, exps[f]) * s
            });
        }
        total * self.grid.cell_volume()
    }
}

/// `φ(u) = ∫ |∇u|^{m(x)} / m(x) dx`, discretized on faces.
pub fn phi(u: &GridFunction, m: &ExponentField) -> f64 {
    assert!(u.same_grid(m.grid()), "grid function and exponent live on different grids");
    DirichletEnergy::new(m, 0.0).value(u.values())
}

/// φ with the regularization used by `dphi(·, ·, eps_reg)`.
pub fn phi_regularized(u: &GridFunction, m: &ExponentField, eps_reg: f64) -> f64 {
    assert!(u.same_grid(m.grid()), "grid function and exponent live on different grids");
    DirichletEnergy::new(m, eps_reg).value(u.values())
}

/// `−Δ_{m(x)} u` with the homogeneous Dirichlet condition; the gradient of
/// [`phi_regularized`] for the same `eps_reg`. At `eps_reg = 0` degenerate
/// faces with m < 2 carry zero flux.
pub fn dphi(u: &GridFunction, m: &ExponentField, eps_reg: f64) -> GridFunction {
    assert!(u.same_grid(m.grid()), "grid function and exponent live on different grids");
    GridFunction::from_raw(u.grid().clone(), DirichletEnergy::new(m, eps_reg).gradient(u.values()))
}

/// Default regularization: none when m⁻ >= 2, 1e-10 otherwise.
pub fn default_eps_reg(m: &ExponentField) -> f64 {
    if m.p_minus() >= 2.0 {
        0.0
    } else {
        1e-10
    }
}

/// `‖u‖_{m(x)} / ‖∇u‖_{m(x)}`, a lower estimate of the discrete Poincaré constant.
pub fn poincare_ratio(u: &GridFunction, m: &ExponentField) -> Result<f64> {
    let num = crate::modular::luxemburg_norm(u, m)?;
    let den = grad(u).luxemburg_norm(m)?;
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner;

    fn line(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new_1d(n, 0.0, 1.0).unwrap())
    }

    #[test]
    fn grad_examples() {
        let g = line(8);
        assert!(grad(&GridFunction::zeros(&g)).axis(0).iter().all(|&d| d == 0.0));
        let u = GridFunction::from_fn_dirichlet(&g, |x| x[0]).unwrap();
        let d = grad(&u);
        for f in 1..g.faces(0) - 1 {
            assert!((d.axis(0)[f] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_zero_and_homogeneity() {
        let g = line(12);
        let m = ExponentField::constant(&g, 3.0).unwrap();
        assert_eq!(phi(&GridFunction::zeros(&g), &m), 0.0);
        let u = GridFunction::from_fn_dirichlet(&g, |x| (5.0 * x[0]).sin()).unwrap();
        let ratio = phi(&u.scale(-1.7), &m) / phi(&u, &m);
        assert!((ratio - 1.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_energy_gives_negative_laplacian() {
        let g = line(6);
        let m = ExponentField::constant(&g, 2.0).unwrap();
        let u = GridFunction::new(g.clone(), vec![0.0, 1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
        let lap = dphi(&u, &m, 0.0);
        let h2 = g.spacing(0).powi(2);
        for i in 1..5 {
            let expected = -(u.values()[i + 1] - 2.0 * u.values()[i] + u.values()[i - 1]) / h2;
            assert!((lap.values()[i] - expected).abs() < 1e-10 * expected.abs().max(1.0));
        }
        assert!((inner(&lap, &u) - 2.0 * phi(&u, &m)).abs() < 1e-10);
    }

    #[test]
    fn regularized_delta_matches_value_difference() {
        let g = line(10);
        let m = ExponentSpec::Ramp { base: 1.4, slope: 1.0 }.sample(&g).unwrap();
        for eps in [0.0, 1e-3] {
            let e = DirichletEnergy::new(&m, eps);
            let a: Vec<f64> = (0..10).map(|i| ((i * i) as f64 * 0.1).sin()).collect();
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + 0.3 * (i as f64).cos()).collect();
            let d = e.delta(&a, &b);
            assert!((d - (e.value(&b) - e.value(&a))).abs() < 1e-12 * e.value(&b).abs().max(1.0));
        }
    }

    #[test]
    fn degenerate_faces_below_two_have_zero_flux() {
        let g = line(6);
        let m = ExponentField::constant(&g, 1.5).unwrap();
        let u = GridFunction::new(g.clone(), vec![0.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        let d = dphi(&u, &m, 0.0);
        assert!(d.values().iter().all(|v| v.is_finite()));
        assert_eq!(d.values()[2], 0.0);
        assert_eq!(d.values()[3], 0.0);
    }

    #[test]
    fn summation_by_parts() {
        let g = Arc::new(Grid::uniform(2, 7, 0.0, 1.0).unwrap());
        let m = ExponentSpec::SineBump { base: 2.2, amplitude: 0.6 }.sample(&g).unwrap();
        let u = GridFunction::from_fn_dirichlet(&g, |x| (4.0 * x[0] + 1.0).sin() * x[1]).unwrap();
        let e = DirichletEnergy::new(&m, 0.0);
        let lhs = inner(&dphi(&u, &m, 0.0), &u);
        let rhs = e.flux_pairing(u.values());
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs());
        assert!(rhs >= 0.0);
    }

    use crate::exponent::ExponentSpec;
}
