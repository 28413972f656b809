//! One-parameter sweeps over a template config.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use dnflow::diagnostics::fmt_f64;
use thiserror::Error;

use crate::config::RunConfig;
use crate::execute::{evaluate, write_artifacts, Status};
use crate::output::write_atomic;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep requires ≥ 1 value")]
    NoValues,
    #[error("unknown sweep axis `{0}`; expected one of N, cells, lambda, p-amplitude, m-amplitude")]
    UnknownAxis(String),
    #[error("axis {axis} needs {what}, got `{value}`")]
    BadValue { axis: Axis, what: &'static str, value: String },
    #[error("cannot write sweep output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Steps,
    Cells,
    Lambda,
    PAmplitude,
    MAmplitude,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Steps => "N",
            Axis::Cells => "cells",
            Axis::Lambda => "lambda",
            Axis::PAmplitude => "p-amplitude",
            Axis::MAmplitude => "m-amplitude",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, SweepError> {
        match s {
            "N" => Ok(Axis::Steps),
            "cells" => Ok(Axis::Cells),
            "lambda" => Ok(Axis::Lambda),
            "p-amplitude" => Ok(Axis::PAmplitude),
            "m-amplitude" => Ok(Axis::MAmplitude),
            other => Err(SweepError::UnknownAxis(other.to_string())),
        }
    }
}

/// A parsed sweep value together with its original spelling, which names
/// the per-row output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepValue {
    pub text: String,
    pub value: f64,
}

pub fn parse_values(axis: Axis, raw: &[String]) -> Result<Vec<SweepValue>, SweepError> {
    let raw: Vec<&str> = raw.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if raw.is_empty() {
        return Err(SweepError::NoValues);
    }
    raw.into_iter()
        .map(|text| {
            let bad = |what| SweepError::BadValue { axis, what, value: text.to_string() };
            let value = match axis {
                Axis::Steps | Axis::Cells => text.parse::<usize>().map_err(|_| bad("a positive integer"))? as f64,
                _ => {
                    let v = text.parse::<f64>().map_err(|_| bad("a number"))?;
                    if !v.is_finite() {
                        return Err(bad("a finite number"));
                    }
                    v
                }
            };
            if axis == Axis::Lambda && value <= 0.0 {
                return Err(bad("a positive number"));
            }
            Ok(SweepValue { text: text.to_string(), value })
        })
        .collect()
}

pub fn apply(template: &RunConfig, axis: Axis, value: f64) -> RunConfig {
    let mut cfg = template.clone();
    match axis {
        Axis::Steps => cfg.steps = value as usize,
        Axis::Cells => cfg.cells = value as usize,
        Axis::Lambda => {
            cfg.my_lambdas = vec![value];
            cfg.diag_moreau_yosida = true;
        }
        Axis::PAmplitude => cfg.p_amplitude = value,
        Axis::MAmplitude => cfg.m_amplitude = value,
    }
    cfg
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: SweepValue,
    pub status: Status,
    pub steps_completed: usize,
    pub margins: usize,
    pub violations: usize,
    pub worst_name: Option<String>,
    pub worst_relative_margin: Option<f64>,
    pub max_residual: Option<f64>,
    pub total_iterations: usize,
    pub telescoped_gap: Option<f64>,
    /// Envelope of the first sample at the smallest λ of the run.
    pub phi_lambda: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str = "value,exit_code,status,steps_completed,margins,violations,worst_name,worst_relative_margin,max_residual,total_iterations,telescoped_gap,phi_lambda,error";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let error = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
            r.value.text,
            r.status.exit_code(),
            status,
            r.steps_completed,
            r.margins,
            r.violations,
            r.worst_name.as_deref().unwrap_or(""),
            opt(r.worst_relative_margin),
            opt(r.max_residual),
            r.total_iterations,
            opt(r.telescoped_gap),
            opt(r.phi_lambda),
            error
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    /// A sweep succeeds when at least one row produced a full trajectory.
    pub fn succeeded(&self) -> bool {
        self.rows.iter().any(|r| r.status.completed())
    }
}

/// Runs every value concurrently (up to `workers`, `0` meaning the whole
/// pool), writes each run under `out/<axis>-<value>/` and the aggregate
/// table to `out/sweep.csv`.
pub fn sweep(template: &RunConfig, axis: Axis, values: &[SweepValue], out: &Path, workers: usize) -> Result<SweepOutcome, SweepError> {
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let jobs: Vec<SweepValue> = values.to_vec();
    let results = dnflow::par::run_batch(jobs, workers, |v| {
        let cfg = apply(template, axis, v.value);
        let art = evaluate(&cfg);
        let dir = out.join(format!("{}-{}", axis.name(), v.text));
        let written = write_artifacts(&art, &dir);
        let s = &art.summary;
        let mut error = s.failure.as_ref().map(|f| f.message.clone());
        if let Err(e) = written {
            error = Some(format!("cannot write {}: {e}", dir.display()));
        }
        SweepRow {
            status: s.status,
            steps_completed: s.steps_completed,
            margins: art.margins.len(),
            violations: s.reports.iter().map(|r| r.violations).sum(),
            worst_name: s.worst.as_ref().map(|w| w.name.clone()),
            worst_relative_margin: s.worst.as_ref().map(|w| w.relative_margin()),
            max_residual: s.max_residual,
            total_iterations: s.total_iterations,
            telescoped_gap: s.telescoped_gap,
            phi_lambda: s.smallest_lambda_envelope().map(|(_, e)| e),
            error,
            value: v,
        }
    });
    write_atomic(&out.join("sweep.csv"), &sweep_csv(&results))?;
    Ok(SweepOutcome { rows: results })
}
