//! CSV rendering and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use dnflow::diagnostics::{fmt_f64, EnvelopeRow, RegularizationPoint};
use dnflow::{GridFunction, RunReport};

pub const TRAJECTORY_HEADER: &str = "n,t,phi,modular_v,psi_star_eta,residual,iterations";

/// Writes through a sibling temporary file and a rename, so a reader never
/// sees a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// One row per time level; the `n = 0` row has no velocity, so those
/// columns are empty.
pub fn trajectory_csv(run: &RunReport) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    let _ = writeln!(out, "0,{},{},,,,", fmt_f64(0.0), fmt_f64(run.phi0));
    for (k, s) in run.steps.iter().enumerate() {
        let n = k + 1;
        let _ = writeln!(
            out,
            "{n},{},{},{},{},{},{}",
            fmt_f64(run.time(n)),
            fmt_f64(s.phi_next),
            fmt_f64(s.modular_v),
            fmt_f64(s.psi_star_eta),
            fmt_f64(s.residual),
            s.iterations
        );
    }
    out
}

fn coord_header(dim: usize) -> &'static str {
    if dim == 2 {
        "x,y"
    } else {
        "x"
    }
}

fn push_coords(out: &mut String, u: &GridFunction, i: usize) {
    let g = u.grid();
    let c = g.center(i);
    out.push_str(&fmt_f64(c[0]));
    if g.dim() == 2 {
        out.push(',');
        out.push_str(&fmt_f64(c[1]));
    }
}

/// Cellwise columns over a shared grid: coordinates then one column per field.
pub fn fields_csv(names: &[&str], fields: &[&GridFunction]) -> String {
    let first = fields[0];
    let mut out = String::from(coord_header(first.grid().dim()));
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for i in 0..first.len() {
        push_coords(&mut out, first, i);
        for f in fields {
            out.push(',');
            out.push_str(&fmt_f64(f.values()[i]));
        }
        out.push('\n');
    }
    out
}

/// Up to five snapshots spread evenly over the run, including both ends.
pub fn snapshots_csv(run: &RunReport) -> String {
    let done = run.steps.len();
    let mut levels: Vec<usize> = (0..=4).map(|k| k * done / 4).collect();
    levels.dedup();
    let names: Vec<String> = levels.iter().map(|&n| format!("u_{n}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let fields: Vec<&GridFunction> = levels.iter().map(|&n| run.u(n)).collect();
    fields_csv(&name_refs, &fields)
}

pub fn regularization_csv(points: &[RegularizationPoint]) -> String {
    let mut out = String::from("delta,s,delta_s\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", fmt_f64(p.delta), fmt_f64(p.s), fmt_f64(p.delta_s));
    }
    out
}

pub fn envelope_csv(rows: &[EnvelopeRow]) -> String {
    let mut out = String::from("sample,lambda,phi,phi_resolvent,envelope,residual\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.sample,
            fmt_f64(r.lambda),
            fmt_f64(r.phi),
            fmt_f64(r.phi_resolvent),
            fmt_f64(r.envelope),
            fmt_f64(r.residual)
        );
    }
    out
}
