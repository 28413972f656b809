//! One configured run: solve, certify, write artifacts.

use std::io;
use std::path::Path;

use dnflow::diagnostics::{
    chain_rule_report, energy_suprema, first_energy_report, margins_to_csv, moreau_yosida_report,
    regularization_report, second_energy_report, summarize, telescoped_gap, EnergySuprema, EnvelopeRow,
    InequalityMargin, RegularizationPoint,
};
use dnflow::exponent::{validate_hypotheses, HypothesisReport};
use dnflow::stepper::run_or_partial;
use dnflow::{Error, GridFunction, RunReport};
use serde::Serialize;

use crate::config::{ConfigError, Problem, RunConfig};
use crate::output::{envelope_csv, fields_csv, regularization_csv, snapshots_csv, trajectory_csv, write_atomic};

/// Outcome of a run, with the process exit code it maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    MarginViolation,
    InvalidConfig,
    HypothesisFailure,
    SolverFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::MarginViolation => 1,
            Status::InvalidConfig => 2,
            Status::HypothesisFailure => 3,
            Status::SolverFailure => 4,
        }
    }

    /// The run produced a full trajectory, whatever the margins say.
    pub fn completed(self) -> bool {
        matches!(self, Status::Passed | Status::MarginViolation)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    /// Zero-based index of the step that failed, when there is one.
    pub step: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub name: &'static str,
    pub total: usize,
    pub violations: usize,
    pub worst: Option<InequalityMargin>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizationSummary {
    pub skipped: Option<String>,
    pub points: Vec<RegularizationPoint>,
    pub c_run: f64,
    pub c_envelope: f64,
    pub sup_tf_dual: f64,
}

/// Contents of `run_summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: Status,
    pub exit_code: i32,
    pub config: RunConfig,
    pub hypotheses: Option<HypothesisReport>,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub max_residual: Option<f64>,
    pub total_iterations: usize,
    pub suprema: Option<EnergySuprema>,
    pub telescoped_gap: Option<f64>,
    pub reports: Vec<ReportSummary>,
    pub worst: Option<InequalityMargin>,
    pub regularization: Option<RegularizationSummary>,
    pub moreau_yosida: Option<Vec<EnvelopeRow>>,
    pub failure: Option<Failure>,
}

impl RunSummary {
    fn new(cfg: &RunConfig) -> Self {
        RunSummary {
            status: Status::Passed,
            exit_code: 0,
            config: cfg.clone(),
            hypotheses: None,
            steps_requested: cfg.steps,
            steps_completed: 0,
            max_residual: None,
            total_iterations: 0,
            suprema: None,
            telescoped_gap: None,
            reports: Vec::new(),
            worst: None,
            regularization: None,
            moreau_yosida: None,
            failure: None,
        }
    }

    fn fail(&mut self, status: Status, kind: &'static str, message: String, step: Option<usize>) {
        self.status = status;
        self.exit_code = status.exit_code();
        self.failure = Some(Failure { kind, message, step });
    }

    /// Value of the first sample's envelope at the smallest λ, if computed.
    pub fn smallest_lambda_envelope(&self) -> Option<(f64, f64)> {
        let rows = self.moreau_yosida.as_ref()?;
        rows.iter()
            .filter(|r| r.sample == 0)
            .min_by(|a, b| a.lambda.total_cmp(&b.lambda))
            .map(|r| (r.lambda, r.envelope))
    }
}

/// Everything computed for a run, before it is written out.
pub struct Artifacts {
    pub summary: RunSummary,
    pub run: Option<RunReport>,
    pub margins: Vec<InequalityMargin>,
}

fn classify(e: &Error) -> (Status, &'static str, Option<usize>) {
    match e {
        Error::Step { step, source } => {
            let (status, kind, _) = classify(source);
            (status, kind, Some(*step))
        }
        Error::NonConvergence { .. } | Error::NonFinite { .. } | Error::Bracketing => {
            (Status::SolverFailure, "non_convergence", None)
        }
        Error::Hypothesis(_) => (Status::HypothesisFailure, "hypothesis", None),
        _ => (Status::InvalidConfig, "invalid_input", None),
    }
}

/// Validates, solves and evaluates the enabled diagnostics without touching
/// the file system.
pub fn evaluate(cfg: &RunConfig) -> Artifacts {
    let mut summary = RunSummary::new(cfg);
    let mut margins = Vec::new();
    let problem = match cfg.validate().and_then(|_| cfg.problem()) {
        Ok(p) => p,
        Err(ConfigError::Hypothesis(msg)) => {
            summary.fail(Status::HypothesisFailure, "hypothesis", msg, None);
            return Artifacts { summary, run: None, margins };
        }
        Err(e) => {
            summary.fail(Status::InvalidConfig, "invalid_config", e.to_string(), None);
            return Artifacts { summary, run: None, margins };
        }
    };
    let Problem { grid, p, m, u0, forcing, prox } = problem;
    match validate_hypotheses(&p, &m, grid.dim()) {
        Ok(h) => {
            let reason = h.failure_reason();
            summary.hypotheses = Some(h);
            if let Some(reason) = reason {
                summary.fail(Status::HypothesisFailure, "hypothesis", reason, None);
                return Artifacts { summary, run: None, margins };
            }
        }
        Err(e) => {
            summary.fail(Status::InvalidConfig, "invalid_config", e.to_string(), None);
            return Artifacts { summary, run: None, margins };
        }
    }

    let run = match run_or_partial(&u0, &forcing, cfg.t_final, cfg.steps, &p, &m, &prox) {
        Ok(r) => r,
        Err(failure) => {
            let (status, kind, step) = classify(&failure.error);
            summary.fail(status, kind, failure.error.to_string(), step);
            if let Some(partial) = &failure.partial {
                record_steps(&mut summary, partial);
            }
            return Artifacts { summary, run: failure.partial.map(|b| *b), margins };
        }
    };
    record_steps(&mut summary, &run);

    if let Err(e) = diagnose(cfg, &run, &mut summary, &mut margins) {
        summary.fail(Status::SolverFailure, "diagnostics", e.to_string(), None);
        return Artifacts { summary, run: Some(run), margins };
    }
    let all = summarize(&margins);
    summary.worst = all.worst;
    if all.violations > 0 {
        summary.status = Status::MarginViolation;
        summary.exit_code = Status::MarginViolation.exit_code();
    }
    Artifacts { summary, run: Some(run), margins }
}

fn record_steps(summary: &mut RunSummary, run: &RunReport) {
    summary.steps_completed = run.steps.len();
    summary.max_residual = Some(run.max_residual());
    summary.total_iterations = run.steps.iter().map(|s| s.iterations).sum();
}

fn push_report(summary: &mut RunSummary, margins: &mut Vec<InequalityMargin>, name: &'static str, list: Vec<InequalityMargin>) {
    let s = summarize(&list);
    summary.reports.push(ReportSummary { name, total: s.total, violations: s.violations, worst: s.worst });
    margins.extend(list);
}

fn diagnose(cfg: &RunConfig, run: &RunReport, summary: &mut RunSummary, margins: &mut Vec<InequalityMargin>) -> dnflow::Result<()> {
    summary.suprema = Some(energy_suprema(run)?);
    summary.telescoped_gap = Some(telescoped_gap(run));
    if cfg.diag_first {
        push_report(summary, margins, "first_energy", first_energy_report(run)?);
    }
    if cfg.diag_chain {
        push_report(summary, margins, "chain_rule", chain_rule_report(run)?);
    }
    if cfg.diag_second {
        push_report(summary, margins, "second_energy", second_energy_report(run)?);
    }
    if cfg.diag_regularization {
        let t = run.t_final;
        let rep = regularization_report(run, &[t / 8.0, t / 4.0, t / 2.0])?;
        summary.regularization = Some(RegularizationSummary {
            skipped: rep.skipped.clone(),
            points: rep.points.clone(),
            c_run: rep.c_run,
            c_envelope: rep.c_envelope,
            sup_tf_dual: rep.sup_tf_dual,
        });
        push_report(summary, margins, "regularization", rep.margins);
    }
    if cfg.diag_moreau_yosida {
        let n = run.steps.len();
        let samples: Vec<GridFunction> = [0, n / 2, n].iter().map(|&k| run.u(k).clone()).collect();
        let rep = moreau_yosida_report(&run.p, &run.m, &samples, &cfg.my_lambdas, &run.cfg)?;
        summary.moreau_yosida = Some(rep.rows);
        push_report(summary, margins, "moreau_yosida", rep.margins);
    }
    Ok(())
}

/// Writes `run_summary.json`, `margins.csv`, `trajectory.csv` and
/// `plotdata/` under `out`. Files that do not apply to a failed run are
/// not written.
pub fn write_artifacts(art: &Artifacts, out: &Path) -> io::Result<()> {
    std::fs::create_dir_all(out)?;
    if let Some(run) = &art.run {
        write_atomic(&out.join("trajectory.csv"), &trajectory_csv(run))?;
        write_atomic(&out.join("margins.csv"), &margins_to_csv(&art.margins))?;
        let plot = out.join("plotdata");
        let last = run.u(run.steps.len());
        write_atomic(&plot.join("profile.csv"), &fields_csv(&["u0", "u_final"], &[&run.u0, last]))?;
        write_atomic(&plot.join("snapshots.csv"), &snapshots_csv(run))?;
        let p = GridFunction::new(run.grid.clone(), run.p.values().to_vec()).map_err(io::Error::other)?;
        let m = GridFunction::new(run.grid.clone(), run.m.values().to_vec()).map_err(io::Error::other)?;
        write_atomic(&plot.join("exponents.csv"), &fields_csv(&["p", "m"], &[&p, &m]))?;
        if let Some(reg) = &art.summary.regularization {
            write_atomic(&plot.join("regularization.csv"), &regularization_csv(&reg.points))?;
        }
        if let Some(rows) = &art.summary.moreau_yosida {
            write_atomic(&plot.join("moreau_yosida.csv"), &envelope_csv(rows))?;
        }
    }
    let mut json = serde_json::to_string_pretty(&art.summary).map_err(io::Error::other)?;
    json.push('\n');
    write_atomic(&out.join("run_summary.json"), &json)
}

/// [`evaluate`] followed by [`write_artifacts`].
pub fn execute(cfg: &RunConfig, out: &Path) -> io::Result<RunSummary> {
    let art = evaluate(cfg);
    write_artifacts(&art, out)?;
    Ok(art.summary)
}
