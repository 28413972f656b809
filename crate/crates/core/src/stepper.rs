//! Implicit time stepping.
//!
//! With `h = T/N`, `t_n = n h` and `f_n` the mean of `f` over
//! `(t_{n-1}, t_n]`, each step solves
//!
//! ```text
//! ∂ψ((u_{n+1} − u_n)/h) + ∂φ(u_{n+1}) = f_{n+1}
//! ```
//!
//! by minimizing `J_n(u) = hψ((u − u_n)/h) + φ(u) − ⟨f_{n+1}, u⟩` from the
//! warm start `u_n`.

use std::sync::Arc;

use crate::convex::{minimize_convex, CompositeObjective, ProxConfig};
use crate::energy::DirichletEnergy;
use crate::error::{Error, Result};
use crate::exponent::{validate_hypotheses, ExponentField, HypothesisReport};
use crate::field::GridFunction;
use crate::forcing::ForcingSpec;
use crate::grid::Grid;
use crate::modular::{dpsi, modular, psi_star, young_constant};

/// Boundary values of `u0` up to this size are treated as roundoff and reset to 0.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// One accepted step `u_n → u_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `n`; the record holds `u_{n+1}`.
    pub index: usize,
    /// `t_{n+1}`.
    pub time: f64,
    pub u_next: GridFunction,
    /// `v_n = (u_{n+1} − u_n)/h`.
    pub velocity: GridFunction,
    /// `η_n = ∂ψ(v_n)`.
    pub eta: GridFunction,
    /// `ξ_n = f_{n+1} − η_n`, the element of `∂φ(u_{n+1})` selected by the scheme.
    pub xi: GridFunction,
    /// Dual norm of `η_n + ∂φ(u_{n+1}) − f_{n+1}` over interior cells.
    pub residual: f64,
    pub phi_next: f64,
    /// `∫ |v_n|^{p(x)}`.
    pub modular_v: f64,
    pub psi_star_eta: f64,
    pub iterations: usize,
}

/// One step of the scheme from `u_n` with the averaged forcing `f_next`.
/// `index` and `time` of the record are left at `0` and `h`.
pub fn step(
    u_n: &GridFunction,
    f_next: &GridFunction,
    h: f64,
    p: &ExponentField,
    m: &ExponentField,
    cfg: &ProxConfig,
) -> Result<StepRecord> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {h}")));
    }
    let obj = CompositeObjective::new(p, m, h, u_n, Some(f_next), cfg.eps_reg)?;
    let out = minimize_convex(&obj, u_n, cfg)?;
    let u_next = out.minimizer;
    let velocity = u_next.sub(u_n).scale(1.0 / h).interior();
    let eta = dpsi(&velocity, p);
    let xi = f_next.sub(&eta);
    let phi_next = DirichletEnergy::new(m, cfg.eps_reg).value(u_next.values());
    Ok(StepRecord {
        index: 0,
        time: h,
        modular_v: modular(&velocity, p),
        psi_star_eta: psi_star(&eta, p),
        residual: out.residual,
        iterations: out.iterations,
        phi_next,
        u_next,
        velocity,
        eta,
        xi,
    })
}

/// A completed (or partial) trajectory with everything the diagnostics need.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub grid: Arc<Grid>,
    pub p: ExponentField,
    pub m: ExponentField,
    pub forcing: ForcingSpec,
    pub t_final: f64,
    /// Number of steps N.
    pub n_steps: usize,
    pub h: f64,
    pub cfg: ProxConfig,
    pub hypotheses: HypothesisReport,
    pub u0: GridFunction,
    /// `φ(u_0)` with the run's regularization.
    pub phi0: f64,
    /// Accepted steps; fewer than `n_steps` only in a partial report.
    pub steps: Vec<StepRecord>,
    /// `f_1, …, f_N`.
    pub forcing_averages: Vec<GridFunction>,
    /// `∬_Q |f|^{p'(x)}`.
    pub forcing_space_time: f64,
    /// `C_{1/2}` of the variable-exponent Young inequality.
    pub young_c: f64,
}

impl RunReport {
    pub fn is_complete(&self) -> bool {
        self.steps.len() == self.n_steps
    }

    /// `t_n`, with `t_N = T` exactly.
    pub fn time(&self, n: usize) -> f64 {
        if n == self.n_steps {
            self.t_final
        } else {
            n as f64 * self.h
        }
    }

    /// `u_n` for `0 ≤ n ≤` number of accepted steps.
    pub fn u(&self, n: usize) -> &GridFunction {
        if n == 0 {
            &self.u0
        } else {
            &self.steps[n - 1].u_next
        }
    }

    /// `φ(u_n)`.
    pub fn phi(&self, n: usize) -> f64 {
        if n == 0 {
            self.phi0
        } else {
            self.steps[n - 1].phi_next
        }
    }

    /// `f_n` for `1 ≤ n ≤ N`.
    pub fn f(&self, n: usize) -> &GridFunction {
        &self.forcing_averages[n - 1]
    }

    pub fn max_residual(&self) -> f64 {
        self.steps.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let done = self.steps.len();
        let t = t.clamp(0.0, self.time(done));
        let n = ((t / self.h).ceil() as usize).clamp(1, done.max(1)) - 1;
        (n, t)
    }

    /// Piecewise-linear interpolant `u_N(t)`.
    pub fn linear_interpolant(&self, t: f64) -> GridFunction {
        if self.steps.is_empty() {
            return self.u0.clone();
        }
        let (n, t) = self.locate(t);
        let w = ((t - self.time(n)) / self.h).clamp(0.0, 1.0);
        self.u(n).lincomb(1.0 - w, self.u(n + 1), w)
    }

    /// Piecewise-constant interpolant `ū_N(t) = u_{n+1}` on `(t_n, t_{n+1}]`;
    /// `u_0` at `t = 0`.
    pub fn constant_interpolant(&self, t: f64) -> GridFunction {
        if t <= 0.0 || self.steps.is_empty() {
            return self.u0.clone();
        }
        let (n, _) = self.locate(t);
        self.u(n + 1).clone()
    }
}

/// Failed run: the error and the steps accepted before it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<Box<RunReport>>,
}

/// Solve on `(0, T)` with `N` steps. Hypotheses, inputs and the boundary
/// condition of `u0` are checked before the first step.
pub fn run(
    u0: &GridFunction,
    forcing: &ForcingSpec,
    t_final: f64,
    n_steps: usize,
    p: &ExponentField,
    m: &ExponentField,
    cfg: &ProxConfig,
) -> Result<RunReport> {
    run_or_partial(u0, forcing, t_final, n_steps, p, m, cfg).map_err(|f| f.error)
}

/// As [`run`], but a failure during stepping keeps the partial report.
pub fn run_or_partial(
    u0: &GridFunction,
    forcing: &ForcingSpec,
    t_final: f64,
    n_steps: usize,
    p: &ExponentField,
    m: &ExponentField,
    cfg: &ProxConfig,
) -> std::result::Result<RunReport, RunFailure> {
    let early = |error: Error| RunFailure { error, partial: None };
    let mut report = prepare(u0, forcing, t_final, n_steps, p, m, cfg).map_err(early)?;
    for n in 0..n_steps {
        let f_next = &report.forcing_averages[n];
        match step(report.u(n), f_next, report.h, p, m, cfg) {
            Ok(mut rec) => {
                rec.index = n;
                rec.time = report.time(n + 1);
                report.steps.push(rec);
            }
            Err(e) => {
                return Err(RunFailure { error: Error::Step { step: n, source: Box::new(e) }, partial: Some(Box::new(report)) });
            }
        }
    }
    Ok(report)
}

fn prepare(
    u0: &GridFunction,
    forcing: &ForcingSpec,
    t_final: f64,
    n_steps: usize,
    p: &ExponentField,
    m: &ExponentField,
    cfg: &ProxConfig,
) -> Result<RunReport> {
    let grid = p.grid().clone();
    u0.check_grid(&grid)?;
    if m.grid() != &grid && **m.grid() != *grid {
        return Err(Error::GridMismatch);
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be positive, got {t_final}")));
    }
    if n_steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 time steps, got {n_steps}")));
    }
    cfg.validate()?;
    forcing.validate(&grid)?;
    let hypotheses = validate_hypotheses(p, m, grid.dim())?;
    if let Some(reason) = hypotheses.failure_reason() {
        return Err(Error::Hypothesis(reason));
    }
    if let Some((cell, value)) = u0.boundary_violation() {
        if value > BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryViolation { cell, value });
        }
    }
    let forcing_space_time = forcing.space_time_modular(p, t_final)?;
    if !forcing_space_time.is_finite() {
        return Err(Error::Hypothesis("(H3) requires f ∈ L^{p'(x)}(Q); the forcing is not integrable".into()));
    }
    let u0 = u0.interior();
    let h = t_final / n_steps as f64;
    let forcing_averages = (1..=n_steps).map(|n| forcing.average(&grid, n, h)).collect::<Result<Vec<_>>>()?;
    let phi0 = DirichletEnergy::new(m, cfg.eps_reg).value(u0.values());
    Ok(RunReport {
        young_c: young_constant(0.5, p.p_minus(), p.p_plus()),
        grid,
        p: p.clone(),
        m: m.clone(),
        forcing: forcing.clone(),
        t_final,
        n_steps,
        h,
        cfg: *cfg,
        hypotheses,
        u0,
        phi0,
        steps: Vec::with_capacity(n_steps),
        forcing_averages,
        forcing_space_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentSpec;
    use crate::forcing::{SpaceProfile, TimeProfile};

    fn setup(n: usize) -> (Arc<Grid>, ExponentField, ExponentField) {
        let g = Arc::new(Grid::new_1d(n, 0.0, 1.0).unwrap());
        let p = ExponentSpec::SineBump { base: 2.5, amplitude: 0.4 }.sample(&g).unwrap();
        let m = ExponentSpec::Ramp { base: 2.0, slope: 0.5 }.sample(&g).unwrap();
        (g, p, m)
    }

    #[test]
    fn zero_data_stays_zero() {
        let (g, p, m) = setup(16);
        let r = run(&GridFunction::zeros(&g), &ForcingSpec::zero(), 1.0, 4, &p, &m, &ProxConfig::default()).unwrap();
        assert!(r.is_complete());
        assert!(r.steps.iter().all(|s| s.u_next.is_zero() && s.residual == 0.0));
    }

    #[test]
    fn unforced_energy_decreases() {
        let (g, p, m) = setup(32);
        let u0 = GridFunction::from_fn_dirichlet(&g, |x| (std::f64::consts::PI * x[0]).sin()).unwrap();
        let r = run(&u0, &ForcingSpec::zero(), 0.2, 10, &p, &m, &ProxConfig::default()).unwrap();
        for n in 0..10 {
            assert!(r.phi(n + 1) <= r.phi(n) + 1e-12);
        }
        assert_eq!(r.time(10), 0.2);
    }

    #[test]
    fn step_identity_and_interpolants() {
        let (g, p, m) = setup(24);
        let u0 = GridFunction::from_fn_dirichlet(&g, |x| x[0] * (1.0 - x[0])).unwrap();
        let f = ForcingSpec::Separable { space: SpaceProfile::SineBump { amplitude: 2.0 }, time: TimeProfile::ExpDecay { rate: 1.0 } };
        let r = run(&u0, &f, 0.5, 5, &p, &m, &ProxConfig::default()).unwrap();
        for (n, s) in r.steps.iter().enumerate() {
            let sum = s.eta.add(&s.xi);
            for (a, b) in sum.values().iter().zip(r.f(n + 1).values()) {
                assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
            }
        }
        assert_eq!(r.linear_interpolant(0.0).values(), r.u0.values());
        assert_eq!(r.constant_interpolant(r.time(2)).values(), r.u(2).values());
        assert_eq!(r.constant_interpolant(r.time(2) + 1e-9).values(), r.u(3).values());
        let mid = r.linear_interpolant(0.5 * (r.time(1) + r.time(2)));
        let expected = r.u(1).lincomb(0.5, r.u(2), 0.5);
        for (a, b) in mid.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn input_errors() {
        let (g, p, m) = setup(16);
        let cfg = ProxConfig::default();
        let bump = GridFunction::from_fn(&g, |_| 1.0).unwrap();
        assert!(matches!(run(&bump, &ForcingSpec::zero(), 1.0, 4, &p, &m, &cfg), Err(Error::BoundaryViolation { .. })));
        let z = GridFunction::zeros(&g);
        assert!(run(&z, &ForcingSpec::zero(), 1.0, 1, &p, &m, &cfg).is_err());
        let p_bad = ExponentField::constant(&g, 1.5).unwrap();
        let f = ForcingSpec::Separable { space: SpaceProfile::Constant { value: 1.0 }, time: TimeProfile::InverseSqrt };
        assert!(matches!(run(&z, &f, 1.0, 4, &p_bad, &m, &cfg), Err(Error::Hypothesis(_))));
    }
}
