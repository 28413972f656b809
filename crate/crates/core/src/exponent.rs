//! Variable exponents p(x), m(x) sampled at cell centres.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par;

/// Closed-form exponent profiles, all functions of the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentSpec {
    Constant { value: f64 },
    /// `base + slope * x1`
    Ramp { base: f64, slope: f64 },
    /// `base + amplitude * sin(pi * x1)`
    SineBump { base: f64, amplitude: f64 },
    /// `left` for `x1 < split`, `right` otherwise.
    Step { left: f64, right: f64, split: f64 },
}

impl ExponentSpec {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            ExponentSpec::Constant { value } => value,
            ExponentSpec::Ramp { base, slope } => base + slope * x[0],
            ExponentSpec::SineBump { base, amplitude } => base + amplitude * (PI * x[0]).sin(),
            ExponentSpec::Step { left, right, split } => {
                if x[0] < split {
                    left
                } else {
                    right
                }
            }
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<ExponentField> {
        let values = par::map_indexed(grid.len(), |i| self.eval(grid.center(i)));
        ExponentField::new(grid.clone(), values)
    }
}

/// Per-cell exponent with cached extrema `p⁻ = min`, `p⁺ = max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    p_minus: f64,
    p_plus: f64,
}

impl ExponentField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidExponent(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v > 1.0) {
                return Err(Error::InvalidExponent(format!("value {v} at cell {i} is outside (1, inf)")));
            }
        }
        let p_minus = values.iter().copied().fold(f64::INFINITY, f64::min);
        let p_plus = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ExponentField { grid, values, p_minus, p_plus })
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![value; grid.len()])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Dual exponent p' = p / (p - 1).
    pub fn conjugate(&self) -> ExponentField {
        let values: Vec<f64> = par::map_indexed(self.values.len(), |i| conjugate_exponent(self.values[i]));
        let p_minus = conjugate_exponent(self.p_plus);
        let p_plus = conjugate_exponent(self.p_minus);
        ExponentField { grid: self.grid.clone(), values, p_minus, p_plus }
    }

    /// Exponent at each face normal to `axis`: the mean of the two adjacent cells.
    pub fn face_values(&self, axis: usize) -> Vec<f64> {
        par::map_indexed(self.grid.faces(axis), |f| {
            let (lo, hi) = self.grid.face_cells(axis, f);
            0.5 * (self.values[lo] + self.values[hi])
        })
    }
}

/// Scalar dual exponent. Computed as `1 + 1/(p-1)` which keeps the
/// involution exact to within an ulp or two.
pub fn conjugate_exponent(p: f64) -> f64 {
    1.0 + 1.0 / (p - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogHolderReport {
    pub holds: bool,
    /// Cell pair attaining `required_a`, if the exponent is not constant.
    pub worst_pair: Option<(usize, usize)>,
    /// Smallest constant for which the condition holds on this grid.
    pub required_a: f64,
}

/// Exhaustive pair scan of `|p(x) - p(x')| <= A / log(e + 1/|x - x'|)`.
pub fn log_holder_check(p: &ExponentField, a: f64) -> Result<LogHolderReport> {
    let n = p.grid.len();
    if n < 2 {
        return Err(Error::InvalidArgument("log-Hölder scan needs at least two cells".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let (required_a, worst_pair) = pair_scan(p, &all);
    Ok(LogHolderReport { holds: required_a <= a, worst_pair, required_a })
}

fn pair_scan(p: &ExponentField, cells: &[usize]) -> (f64, Option<(usize, usize)>) {
    let grid = &p.grid;
    let rows = par::map_indexed(cells.len(), |k| {
        let a = cells[k];
        let mut best = (0.0, None);
        for &b in &cells[k + 1..] {
            let dp = (p.values[a] - p.values[b]).abs();
            if dp == 0.0 {
                continue;
            }
            let need = dp * (E + 1.0 / grid.distance(a, b)).ln();
            if need > best.0 {
                best = (need, Some((a, b)));
            }
        }
        best
    });
    rows.into_iter().fold((0.0, None), |acc, r| if r.0 > acc.0 { r } else { acc })
}

/// `required_a` measured on the grid itself and on its 2x and 4x coarsenings
/// (every other / every fourth cell centre). Entries are `None` when the
/// coarsened set has fewer than two cells.
pub fn log_holder_refinement_profile(p: &ExponentField) -> [Option<f64>; 3] {
    let mut out = [None; 3];
    for (slot, factor) in [1usize, 2, 4].into_iter().enumerate() {
        let cells = p.grid.subsample_indices(factor);
        if cells.len() >= 2 {
            out[slot] = Some(pair_scan(p, &cells).0);
        }
    }
    out
}

/// Sobolev-critical exponent m*(x) = N m / (N - m)_+, `+inf` where m ≥ N.
pub fn sobolev_critical(m: &ExponentField, dim: usize) -> Result<Vec<f64>> {
    if !(dim == 1 || dim == 2) {
        return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")));
    }
    let n = dim as f64;
    Ok(m.values
        .iter()
        .map(|&mx| {
            let gap = n - mx;
            if gap <= 0.0 {
                f64::INFINITY
            } else {
                n * mx / gap
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub p_minus: f64,
    pub p_plus: f64,
    pub m_minus: f64,
    pub m_plus: f64,
    /// 1 < p⁻, m⁻ and p⁺, m⁺ < ∞.
    pub bounds_ok: bool,
    /// `required_a` of m on the grid itself.
    pub m_log_holder_a: f64,
    /// `required_a` did not grow by more than 5% between the 4x coarsening
    /// and the grid itself. Advisory only.
    pub m_log_holder_stable: bool,
    /// min over cells of m*(x) - p(x); `+inf` when m ≥ N everywhere.
    #[serde(serialize_with = "serialize_extended")]
    pub critical_margin: f64,
    pub critical_ok: bool,
}

impl HypothesisReport {
    /// Hard gate: exponent bounds and the strict subcriticality of p.
    pub fn passes(&self) -> bool {
        self.bounds_ok && self.critical_ok
    }

    pub fn failure_reason(&self) -> Option<String> {
        if !(self.p_minus > 1.0) {
            Some(format!("(H1) requires p⁻ > 1, got p⁻ = {}", self.p_minus))
        } else if !(self.m_minus > 1.0) {
            Some(format!("(H1) requires m⁻ > 1, got m⁻ = {}", self.m_minus))
        } else if !self.bounds_ok {
            Some(format!("(H1) requires p⁺, m⁺ < inf, got p⁺ = {}, m⁺ = {}", self.p_plus, self.m_plus))
        } else if !self.critical_ok {
            Some(format!("(H2) requires min(m* - p) > 0, got {}", self.critical_margin))
        } else {
            None
        }
    }
}

fn serialize_extended<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

pub fn validate_hypotheses(p: &ExponentField, m: &ExponentField, dim: usize) -> Result<HypothesisReport> {
    if p.grid != m.grid {
        return Err(Error::GridMismatch);
    }
    let bounds_ok = [p.p_minus, m.p_minus].iter().all(|&v| v > 1.0)
        && [p.p_plus, m.p_plus].iter().all(|&v| v.is_finite());
    let profile = log_holder_refinement_profile(m);
    let fine = profile[0].unwrap_or(0.0);
    let coarse = profile[2].or(profile[1]).unwrap_or(fine);
    let m_log_holder_stable = fine.is_finite() && fine <= 1.05 * coarse + 1e-12;
    let critical = sobolev_critical(m, dim)?;
    let critical_margin = critical
        .iter()
        .zip(p.values.iter())
        .map(|(&ms, &px)| ms - px)
        .fold(f64::INFINITY, f64::min);
    Ok(HypothesisReport {
        p_minus: p.p_minus,
        p_plus: p.p_plus,
        m_minus: m.p_minus,
        m_plus: m.p_plus,
        bounds_ok,
        m_log_holder_a: fine,
        m_log_holder_stable,
        critical_margin,
        critical_ok: critical_margin > 0.0,
    })
}
