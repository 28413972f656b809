//! Batch driver for `dnflow`: flat TOML configs, single runs, parameter
//! sweeps and the built-in `check` suite.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod execute;
pub mod output;
pub mod suite;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use execute::{evaluate, execute, write_artifacts, RunSummary, Status};

/// Sizes the global thread pool. `0` keeps the default; without the
/// `parallel` feature this does nothing.
pub fn init_workers(workers: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        return rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().map_err(|e| e.to_string());
    }
    let _ = workers;
    Ok(())
}
