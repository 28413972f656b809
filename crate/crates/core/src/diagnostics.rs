//! Inequality margins over completed runs.
//!
//! Every check is an [`InequalityMargin`] `lhs ≤ rhs`. Its tolerance is
//! `1e-9` plus the numerical slack the check can legitimately carry,
//! relative to `max(1, |rhs|)`. Slack comes from the per-step solver
//! residuals `r_n = η_n + ∂φ(u_{n+1}) − f_{n+1}` through the Hölder bound
//! `|⟨r, w⟩| ≤ 2‖r‖_{p'}‖w‖_p`; checks that are exact consequences of
//! convexity carry none.

use std::fmt::Write as _;

use serde::Serialize;

use crate::convex::{joint_envelope, prox, ProxConfig};
use crate::energy::{grad, DirichletEnergy};
use crate::error::Result;
use crate::exponent::{conjugate_exponent, ExponentField};
use crate::field::{inner, GridFunction};
use crate::modular::{abs_pow, dpsi, dual_norm, luxemburg_norm, luxemburg_raw, modular, psi_star};
use crate::par;
use crate::stepper::RunReport;

/// Relative tolerance shared by all margins.
pub const BASE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityMargin {
    pub name: String,
    /// Step `n` or summation bound `m`, depending on the check.
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub holds: bool,
    /// Relative tolerance: holds iff `margin ≥ −tolerance · max(1, |rhs|)`.
    pub tolerance: f64,
}

impl InequalityMargin {
    /// `lhs ≤ rhs` with an absolute numerical `slack`.
    pub fn new(name: &str, index: usize, lhs: f64, rhs: f64, slack: f64) -> Self {
        let scale = rhs.abs().max(1.0);
        let tolerance = BASE_TOLERANCE + slack.max(0.0) / scale;
        let margin = rhs - lhs;
        InequalityMargin {
            name: name.to_string(),
            index,
            lhs,
            rhs,
            margin,
            holds: margin >= -tolerance * scale,
            tolerance,
        }
    }

    /// `margin / max(1, |rhs|)`; negative means the raw inequality fails.
    pub fn relative_margin(&self) -> f64 {
        self.margin / self.rhs.abs().max(1.0)
    }
}

/// Counts and the worst entry of a list of margins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginSummary {
    pub total: usize,
    pub violations: usize,
    pub worst: Option<InequalityMargin>,
}

pub fn summarize(margins: &[InequalityMargin]) -> MarginSummary {
    let worst = margins
        .iter()
        .min_by(|a, b| a.relative_margin().total_cmp(&b.relative_margin()))
        .cloned();
    MarginSummary { total: margins.len(), violations: margins.iter().filter(|m| !m.holds).count(), worst }
}

/// `f64` in the fixed 17-significant-digit format used by all CSV output.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const MARGIN_CSV_HEADER: &str = "name,index,lhs,rhs,margin,holds";

pub fn margins_to_csv(margins: &[InequalityMargin]) -> String {
    let mut out = String::from(MARGIN_CSV_HEADER);
    out.push('\n');
    for m in margins {
        let _ = writeln!(out, "{},{},{},{},{},{}", m.name, m.index, fmt_f64(m.lhs), fmt_f64(m.rhs), fmt_f64(m.margin), m.holds);
    }
    out
}

/// Space-time Luxemburg norm of a family of slices `w_n` with weight `h`
/// in time and exponent `exps` in space.
fn space_time_norm(slices: &[&GridFunction], exps: &[f64], h: f64, interior_only: bool) -> Result<f64> {
    let Some(first) = slices.first() else {
        return Ok(0.0);
    };
    let grid = first.grid();
    let mut vals = Vec::with_capacity(slices.len() * grid.len());
    let mut e = Vec::with_capacity(vals.capacity());
    for s in slices {
        for (i, v) in s.values().iter().enumerate() {
            vals.push(if interior_only && grid.is_boundary(i) { 0.0 } else { *v });
            e.push(exps[i]);
        }
    }
    luxemburg_raw(&vals, &e, h * grid.cell_volume())
}

fn dual_exps(p: &ExponentField) -> Vec<f64> {
    p.values().iter().map(|&e| conjugate_exponent(e)).collect()
}

/// `Σ_{n=1}^{N} h ∫ |f_n|^{p'}`, the discrete forcing budget.
pub fn discrete_forcing_budget(run: &RunReport) -> f64 {
    let q = run.p.conjugate();
    run.forcing_averages.iter().map(|f| run.h * modular(f, &q)).sum()
}

/// Per-step quantities shared by several reports.
struct StepData {
    norm_v: Vec<f64>,
    modular_f: Vec<f64>,
}

fn step_data(run: &RunReport) -> Result<StepData> {
    let q = run.p.conjugate();
    let norm_v = par::map_indexed(run.steps.len(), |n| luxemburg_norm(&run.steps[n].velocity, &run.p))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let modular_f = (1..=run.steps.len()).map(|n| modular(run.f(n), &q)).collect();
    Ok(StepData { norm_v, modular_f })
}

/// Uniform bounds realized on the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySuprema {
    /// `Σ h ∫|v_n|^p + sup_n φ(u_n)`.
    pub est1: f64,
    /// `sup_n ‖∇u_n‖_{m(x)}`.
    pub est2: f64,
    /// `‖∂_t u_N‖` in `L^{p(x)}(Q)`.
    pub est3: f64,
    /// `‖∂ψ(∂_t u_N)‖` in `L^{p'(x)}(Q)`.
    pub est4: f64,
    /// `‖ξ‖` in `L^{p'(x)}(Q)` over interior cells.
    pub est5: f64,
}

pub fn energy_suprema(run: &RunReport) -> Result<EnergySuprema> {
    let h = run.h;
    let sum_v: f64 = run.steps.iter().map(|s| h * s.modular_v).sum();
    let sup_phi = (1..=run.steps.len()).map(|n| run.phi(n)).fold(0.0, f64::max);
    let mut est2 = 0.0f64;
    for n in 0..=run.steps.len() {
        est2 = est2.max(grad(run.u(n)).luxemburg_norm(&run.m)?);
    }
    let q = dual_exps(&run.p);
    let v: Vec<&GridFunction> = run.steps.iter().map(|s| &s.velocity).collect();
    let eta: Vec<&GridFunction> = run.steps.iter().map(|s| &s.eta).collect();
    let xi: Vec<&GridFunction> = run.steps.iter().map(|s| &s.xi).collect();
    Ok(EnergySuprema {
        est1: sum_v + sup_phi,
        est2,
        est3: space_time_norm(&v, run.p.values(), h, false)?,
        est4: space_time_norm(&eta, &q, h, false)?,
        est5: space_time_norm(&xi, &q, h, true)?,
    })
}

/// One-step and cumulative first energy inequalities, the interpolant
/// gap, the Jensen bound on the averaged forcing and the dual bound on
/// `∂ψ(∂_t u_N)`.
pub fn first_energy_report(run: &RunReport) -> Result<Vec<InequalityMargin>> {
    let h = run.h;
    let c = run.young_c;
    let data = step_data(run)?;
    let mut out = Vec::new();
    let energy = DirichletEnergy::new(&run.m, run.cfg.eps_reg);
    for (n, s) in run.steps.iter().enumerate() {
        let dphi = energy.delta(run.u(n).values(), s.u_next.values());
        let lhs = 0.5 * s.modular_v + dphi / h;
        let rhs = c * data.modular_f[n];
        out.push(InequalityMargin::new("ei01", n, lhs, rhs, 2.0 * s.residual * data.norm_v[n]));
    }
    let mut sum_v = 0.0;
    let mut sum_f = 0.0;
    let mut slack = 0.0;
    for (n, s) in run.steps.iter().enumerate() {
        sum_v += h * s.modular_v;
        sum_f += h * data.modular_f[n];
        slack += 2.0 * h * s.residual * data.norm_v[n];
        let lhs = 0.5 * sum_v + s.phi_next;
        let rhs = run.phi0 + c * sum_f;
        out.push(InequalityMargin::new("est0", n, lhs, rhs, slack));
    }
    let budget = discrete_forcing_budget(run);
    out.push(InequalityMargin::new("fN_est", run.n_steps, budget, run.forcing_space_time, 0.0));

    // sup_t ∫|u_N − ū_N|^p is attained as t ↓ t_n, where it equals ∫|h v_n|^p.
    let p = &run.p;
    let gap = run
        .steps
        .iter()
        .map(|s| modular(&s.velocity.scale(h), p))
        .fold(0.0, f64::max);
    let factor = h.powf(p.p_minus() - 1.0).max(h.powf(p.p_plus() - 1.0));
    let rhs = 2.0 * factor * (run.phi0 + c * run.forcing_space_time);
    out.push(InequalityMargin::new("interp_gap", run.n_steps, gap, rhs, 2.0 * factor * slack));

    let v: Vec<&GridFunction> = run.steps.iter().map(|s| &s.velocity).collect();
    let eta: Vec<&GridFunction> = run.steps.iter().map(|s| &s.eta).collect();
    let norm_v = space_time_norm(&v, p.values(), h, false)?;
    let norm_eta = space_time_norm(&eta, &dual_exps(p), h, false)?;
    out.push(InequalityMargin::new("dps_bdd", run.n_steps, norm_eta, (norm_v + 1.0).powf(p.p_plus() - 1.0), 0.0));
    Ok(out)
}

/// Two-sided convexity bounds per step and the telescoped identity gap.
pub fn chain_rule_report(run: &RunReport) -> Result<Vec<InequalityMargin>> {
    let energy = DirichletEnergy::new(&run.m, run.cfg.eps_reg);
    let data = step_data(run)?;
    let mut out = Vec::new();
    let mut spread = 0.0;
    let mut slack = 0.0;
    let mut gap = 0.0;
    let mut grad_prev = energy.gradient(run.u0.values());
    for (n, s) in run.steps.iter().enumerate() {
        let (a, b) = (run.u(n), &s.u_next);
        let du = b.sub(a);
        let dphi = energy.delta(a.values(), b.values());
        let grad_next = energy.gradient(b.values());
        let vol = du.grid().cell_volume();
        let upper = vol * par::sum_indexed(du.len(), |i| grad_next[i] * du.values()[i]);
        let lower = vol * par::sum_indexed(du.len(), |i| grad_prev[i] * du.values()[i]);
        out.push(InequalityMargin::new("chain_upper", n, dphi, upper, 0.0));
        out.push(InequalityMargin::new("chain_lower", n, lower, dphi, 0.0));
        spread += upper - lower;
        slack += 2.0 * s.residual * run.h * data.norm_v[n];
        gap += dphi - inner(&s.xi, &du);
        grad_prev = grad_next;
    }
    out.push(InequalityMargin::new("chain_gap", run.steps.len(), gap.abs(), spread, slack));
    Ok(out)
}

/// `|φ(u_N) − φ(u_0) − Σ ⟨ξ_n, u_{n+1} − u_n⟩|`.
pub fn telescoped_gap(run: &RunReport) -> f64 {
    let energy = DirichletEnergy::new(&run.m, run.cfg.eps_reg);
    let mut gap = 0.0;
    for (n, s) in run.steps.iter().enumerate() {
        let a = run.u(n);
        gap += energy.delta(a.values(), s.u_next.values()) - inner(&s.xi, &s.u_next.sub(a));
    }
    gap.abs()
}

/// Right side of the weighted second energy inequality at each `m`, from
/// index 3 to N−1, with its accumulated slack.
fn ee2_terms(run: &RunReport, dexdu_slack: &[f64]) -> Vec<(usize, f64, f64, f64)> {
    let h = run.h;
    let n_steps = run.steps.len();
    let mut out = Vec::new();
    for m in 3..n_steps.min(run.n_steps) {
        let lhs = (m as f64 - 1.0) * h * run.steps[m].psi_star_eta;
        let mut rhs: f64 = (1..m).map(|k| h * run.steps[k].psi_star_eta).sum();
        let mut slack = 0.0;
        for n in 2..=m {
            let du = run.steps[n].u_next.sub(run.u(n));
            rhs += (n as f64 - 1.0) * inner(&run.f(n + 1).sub(run.f(n)), &du);
            slack += (n as f64 - 1.0) * dexdu_slack[n];
        }
        out.push((m, lhs, rhs, slack));
    }
    out
}

/// Differenced scheme tested against `u_{n+1} − u_n`, its conjugate
/// lower bound, and the weighted sum.
pub fn second_energy_report(run: &RunReport) -> Result<Vec<InequalityMargin>> {
    let data = step_data(run)?;
    let h = run.h;
    let mut out = Vec::new();
    let mut dexdu_slack = vec![0.0; run.steps.len()];
    for n in 1..run.steps.len() {
        let (cur, prev) = (&run.steps[n], &run.steps[n - 1]);
        let du = cur.u_next.sub(run.u(n));
        let lhs = inner(&cur.eta.sub(&prev.eta), &du);
        let rhs = inner(&run.f(n + 1).sub(run.f(n)), &du);
        dexdu_slack[n] = 2.0 * (cur.residual + prev.residual) * h * data.norm_v[n];
        out.push(InequalityMargin::new("dexdu", n, lhs, rhs, dexdu_slack[n]));
        let star = h * (cur.psi_star_eta - prev.psi_star_eta);
        out.push(InequalityMargin::new("star_eq", n, star, lhs, 0.0));
    }
    for (m, lhs, rhs, slack) in ee2_terms(run, &dexdu_slack) {
        out.push(InequalityMargin::new("ee2", m, lhs, rhs, slack));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizationPoint {
    pub delta: f64,
    /// `max_{t_n ≥ δ} ψ*(η_n)`.
    pub s: f64,
    pub delta_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizationReport {
    /// Set when the forcing fails the regularity gate; no margins then.
    pub skipped: Option<String>,
    pub points: Vec<RegularizationPoint>,
    /// `max_δ δ·S(δ)` over the tested δ.
    pub c_run: f64,
    /// `max_m m/(m−1) · E_m` with `E_m` the right side of the weighted
    /// second energy inequality; bounds `δ·S(δ)` for every δ ≥ 3h.
    pub c_envelope: f64,
    /// `max_n ‖t_n f_n‖` in `L^{p'(x)}`.
    pub sup_tf_dual: f64,
    pub margins: Vec<InequalityMargin>,
}

/// Shape of the time-regularization estimate: `δ·S(δ)` bounded by one
/// run-level constant and `S` nonincreasing in δ.
pub fn regularization_report(run: &RunReport, deltas: &[f64]) -> Result<RegularizationReport> {
    let regularity = run.forcing.regularity(&run.p, run.t_final)?;
    let mut deltas: Vec<f64> = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    let mut report = RegularizationReport {
        skipped: None,
        points: Vec::new(),
        c_run: 0.0,
        c_envelope: 0.0,
        sup_tf_dual: 0.0,
        margins: Vec::new(),
    };
    if !regularity.admissible {
        report.skipped = regularity.reason.or(Some("forcing is not admissible".into()));
        return Ok(report);
    }
    for n in 1..=run.forcing_averages.len() {
        let tf = run.f(n).scale(run.time(n));
        report.sup_tf_dual = report.sup_tf_dual.max(dual_norm(&tf, &run.p)?);
    }
    let h = run.h;
    for &delta in &deltas {
        let s = run
            .steps
            .iter()
            .enumerate()
            .filter(|(n, _)| run.time(*n) >= delta * (1.0 - 1e-12))
            .map(|(_, st)| st.psi_star_eta)
            .fold(0.0, f64::max);
        report.points.push(RegularizationPoint { delta, s, delta_s: delta * s });
    }
    report.c_run = report.points.iter().map(|p| p.delta_s).fold(0.0, f64::max);

    let data = step_data(run)?;
    let mut dexdu_slack = vec![0.0; run.steps.len()];
    for n in 1..run.steps.len() {
        dexdu_slack[n] = 2.0 * (run.steps[n].residual + run.steps[n - 1].residual) * h * data.norm_v[n];
    }
    let terms = ee2_terms(run, &dexdu_slack);
    let envelope_slack = terms.iter().map(|t| 1.5 * t.3).fold(0.0, f64::max);
    report.c_envelope = terms.iter().map(|&(m, _, rhs, _)| m as f64 / (m as f64 - 1.0) * rhs).fold(0.0, f64::max);
    for (k, p) in report.points.iter().enumerate() {
        if p.delta >= 3.0 * h * (1.0 - 1e-12) {
            report.margins.push(InequalityMargin::new("regu_bound", k, p.delta_s, report.c_envelope, envelope_slack));
        }
    }
    for k in 1..report.points.len() {
        let (small, large) = (&report.points[k - 1], &report.points[k]);
        report.margins.push(InequalityMargin::new("regu_monotone", k, large.s, small.s, 0.0));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub sample: usize,
    pub lambda: f64,
    pub phi: f64,
    pub phi_resolvent: f64,
    pub envelope: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoreauYosidaReport {
    pub rows: Vec<EnvelopeRow>,
    pub margins: Vec<InequalityMargin>,
}

/// λ at or below which the envelope must be within 1% of φ.
pub const ENVELOPE_CONVERGENCE_LAMBDA: f64 = 1e-4;

/// Sandwich, Yosida bound, λ-monotonicity and envelope convergence on each
/// sample, plus the commutation of the envelope with time summation when
/// the samples are read as the slices of one space-time field.
pub fn moreau_yosida_report(
    p: &ExponentField,
    m: &ExponentField,
    samples: &[GridFunction],
    lambdas: &[f64],
    cfg: &ProxConfig,
) -> Result<MoreauYosidaReport> {
    let energy = DirichletEnergy::new(m, cfg.eps_reg);
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    let mut margins = Vec::new();
    for (k, u) in samples.iter().enumerate() {
        let phi = energy.value(u.values());
        let dphi = GridFunction::new(u.grid().clone(), energy.gradient(u.values()))?.interior();
        let bound = psi_star(&dphi, p);
        let mut prev: Option<f64> = None;
        for &lambda in &lambdas {
            let pt = prox(u, lambda, p, m, cfg)?;
            let idx = rows.len();
            margins.push(InequalityMargin::new("my_lower", idx, pt.phi_resolvent, pt.envelope, 0.0));
            margins.push(InequalityMargin::new("my_upper", idx, pt.envelope, phi, 0.0));
            let w = u.sub(&pt.resolvent).scale(1.0 / lambda);
            let slack = 2.0 * pt.residual * luxemburg_norm(&w, p)?;
            margins.push(InequalityMargin::new("yosida_bound", idx, psi_star(&pt.yosida, p), bound, slack));
            if let Some(prev) = prev {
                margins.push(InequalityMargin::new("my_lambda_monotone", idx, prev, pt.envelope, 0.0));
            }
            if lambda <= ENVELOPE_CONVERGENCE_LAMBDA {
                margins.push(InequalityMargin::new("my_convergence", idx, phi - pt.envelope, 0.01 * phi, 0.0));
            }
            prev = Some(pt.envelope);
            rows.push(EnvelopeRow { sample: k, lambda, phi, phi_resolvent: pt.phi_resolvent, envelope: pt.envelope, residual: pt.residual });
        }
    }
    if samples.len() >= 2 {
        let weight = 1.0 / samples.len() as f64;
        let coeffs = vec![weight; samples.len()];
        for &lambda in &lambdas {
            let per_slice: f64 = rows.iter().filter(|r| r.lambda == lambda).map(|r| weight * r.envelope).sum();
            let joint = joint_envelope(samples, &coeffs, lambda, p, m, cfg)?;
            let tol = 10.0 * cfg.tolerance * per_slice.abs().max(1.0);
            margins.push(InequalityMargin::new("my_commute", rows.len(), (per_slice - joint).abs(), tol, 0.0));
        }
    }
    Ok(MoreauYosidaReport { rows, margins })
}

/// Conjugate identity `ψ*(∂ψ(v)) = ∫ |v|^p / p'` as a margin pair.
pub fn conjugate_identity(v: &GridFunction, p: &ExponentField) -> (f64, f64) {
    let lhs = psi_star(&dpsi(v, p), p);
    let vol = v.grid().cell_volume();
    let rhs = vol * par::sum_indexed(v.len(), |i| abs_pow(v.values()[i], p.get(i)) / conjugate_exponent(p.get(i)));
    (lhs, rhs)
}
