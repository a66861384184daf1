//! Worker pool for independent parameter points.
//!
//! With the `parallel` feature the map runs on a scoped rayon pool of the
//! requested width; without it, or with one worker, it is a plain loop.
//! Either way results come back in input order.

use crate::{Error, Result};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "BLOCKADE_WORKERS";

/// Width of the worker pool; `0` means "decide from the environment".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Workers(pub usize);

impl Workers {
    pub const SEQUENTIAL: Workers = Workers(1);

    /// Explicit width if nonzero, else `BLOCKADE_WORKERS`, else the number
    /// of available cores.
    pub fn resolve(self) -> usize {
        if self.0 > 0 {
            return self.0;
        }
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// `f` over `items`, in input order.
pub fn map<T, R, F>(items: &[T], workers: Workers, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let width = workers.resolve();
    if width <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    parallel_map(items, width, f)
}

/// As [`map`] for fallible work; the first failure in input order wins.
pub fn try_map<T, R, F>(items: &[T], workers: Workers, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map(items, workers, f).into_iter().collect()
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], width: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(width).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _width: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Tag a failed sweep point with its drive strength.
pub fn at_point<R>(n_eta: f64, r: Result<R>) -> Result<R> {
    r.map_err(|e| Error::AtPoint {
        n_eta,
        source: Box::new(e),
    })
}
