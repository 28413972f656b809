use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dnflow_cli::check::run_check;
use dnflow_cli::sweep::{parse_values, sweep, Axis};
use dnflow_cli::{execute, init_workers, load_config, Status};

/// Implicit solver for doubly nonlinear parabolic problems with variable
/// exponents.
#[derive(Parser)]
#[command(name = "dnflow", version)]
struct Cli {
    /// Output directory; defaults to `out_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write its artifacts.
    Solve { config: PathBuf },
    /// Run a config once per value of one parameter.
    Sweep {
        config: PathBuf,
        /// One of N, cells, lambda, p-amplitude, m-amplitude.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_negative_numbers = true)]
        values: Vec<String>,
    },
    /// Property suites and the built-in golden configs.
    Check,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(Status::InvalidConfig.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers(cli.workers) {
        return usage_error(format!("cannot size the thread pool: {e}"));
    }
    match cli.command {
        Command::Solve { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(dnflow_cli::ConfigError::Hypothesis(_)) | Err(dnflow_cli::ConfigError::Invalid { .. }) => {
                    // Still parsed; let the run record the failure in its summary.
                    match std::fs::read_to_string(&config).map_err(|e| e.to_string()).and_then(|t| toml::from_str(&t).map_err(|e| e.to_string())) {
                        Ok(c) => c,
                        Err(e) => return usage_error(e),
                    }
                }
                Err(e) => return usage_error(e),
            };
            let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
            match execute(&cfg, &out) {
                Ok(summary) => {
                    match &summary.failure {
                        Some(f) => eprintln!("{}: {}", f.kind, f.message),
                        None => {
                            let violations: usize = summary.reports.iter().map(|r| r.violations).sum();
                            let total: usize = summary.reports.iter().map(|r| r.total).sum();
                            println!("{} steps, {total} margins, {violations} violations", summary.steps_completed);
                        }
                    }
                    println!("wrote {}", out.display());
                    ExitCode::from(summary.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", out.display());
                    ExitCode::from(Status::SolverFailure.exit_code() as u8)
                }
            }
        }
        Command::Sweep { config, axis, values } => {
            let axis: Axis = match axis.parse() {
                Ok(a) => a,
                Err(e) => return usage_error(e),
            };
            let values = match parse_values(axis, &values) {
                Ok(v) => v,
                Err(e) => return usage_error(e),
            };
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return usage_error(e),
            };
            let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
            match sweep(&cfg, axis, &values, &out, cli.workers) {
                Ok(outcome) => {
                    for r in &outcome.rows {
                        println!("{}={} exit {}", axis, r.value.text, r.status.exit_code());
                    }
                    println!("wrote {}", out.join("sweep.csv").display());
                    if outcome.succeeded() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(Status::SolverFailure.exit_code() as u8)
                    }
                }
                Err(e) => usage_error(e),
            }
        }
        Command::Check => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out/check"));
            let lines = run_check(&out, cli.workers);
            for l in &lines {
                println!("{l}");
            }
            if lines.iter().all(|l| l.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
