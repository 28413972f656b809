//! Data-parallel helpers.
//!
//! With the `parallel` feature the per-entry maps run on the rayon pool;
//! without it everything is a plain sequential loop. Reductions always sum
//! fixed-size chunks and then fold the chunk totals left to right, so a sum
//! is bit-identical whichever way it was computed and however many threads
//! the pool has.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Entries per reduction chunk.
pub const CHUNK: usize = 1024;

/// Below this length a map is always evaluated sequentially.
pub const PAR_THRESHOLD: usize = 4096;

/// `true` when the crate was compiled with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if len < PAR_THRESHOLD {
        (0..len).map(f).collect()
    } else {
        (0..len).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

fn chunk_sum<F>(start: usize, end: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64,
{
    let mut acc = 0.0;
    for i in start..end {
        acc += f(i);
    }
    acc
}

/// Deterministic sum of `f(0) + … + f(len-1)`.
#[cfg(feature = "parallel")]
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = if len < PAR_THRESHOLD {
        (0..chunks)
            .map(|c| chunk_sum(c * CHUNK, ((c + 1) * CHUNK).min(len), &f))
            .collect()
    } else {
        (0..chunks)
            .into_par_iter()
            .map(|c| chunk_sum(c * CHUNK, ((c + 1) * CHUNK).min(len), &f))
            .collect()
    };
    partial.iter().fold(0.0, |a, b| a + b)
}

#[cfg(not(feature = "parallel"))]
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    let chunks = len.div_ceil(CHUNK);
    (0..chunks)
        .map(|c| chunk_sum(c * CHUNK, ((c + 1) * CHUNK).min(len), &f))
        .fold(0.0, |a, b| a + b)
}

/// Maximum of `f(i)`; order-independent, so no chunking is needed.
pub fn max_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(len, f).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Runs independent jobs, keeping output order. `workers == 0` means "use
/// the global pool"; `workers == 1` forces sequential execution.
#[cfg(feature = "parallel")]
pub fn run_batch<I, T, F>(items: Vec<I>, workers: usize, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    if workers == 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    if workers == 0 {
        return items.into_par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
        Err(_) => items.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn run_batch<I, T, F>(items: Vec<I>, _workers: usize, f: F) -> Vec<T>
where
    F: Fn(I) -> T,
{
    items.into_iter().map(f).collect()
}
