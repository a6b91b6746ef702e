//! Row-block parallelism. With the `parallel` feature rows are spread over
//! the rayon pool; without it every entry point runs sequentially.

use std::ops::Add;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

/// How batch rows (or independent trials) are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Worker threads the parallel path will use.
pub fn available_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

fn rows_per_task(rows: usize) -> usize {
    let tasks = 4 * available_workers();
    rows.div_ceil(tasks).max(1)
}

/// Calls `f` on contiguous blocks of whole rows of `dst`, each paired with
/// the matching block of `src`, and sums the returned counters.
pub(crate) fn try_row_blocks<C, F>(
    dst: &mut [f64],
    src: Option<&[f64]>,
    cols: usize,
    exec: Exec,
    f: F,
) -> Result<C>
where
    C: Default + Add<Output = C> + Send,
    F: Fn(Option<&[f64]>, &mut [f64]) -> Result<C> + Sync + Send,
{
    if dst.is_empty() {
        return Ok(C::default());
    }
    let block = cols * rows_per_task(dst.len() / cols);
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => match src {
            Some(src) => dst
                .par_chunks_mut(block)
                .zip(src.par_chunks(block))
                .map(|(d, s)| f(Some(s), d))
                .try_reduce(C::default, |a, b| Ok(a + b)),
            None => dst
                .par_chunks_mut(block)
                .map(|d| f(None, d))
                .try_reduce(C::default, |a, b| Ok(a + b)),
        },
        _ => {
            let mut total = C::default();
            match src {
                Some(src) => {
                    for (d, s) in dst.chunks_mut(block).zip(src.chunks(block)) {
                        total = total + f(Some(s), d)?;
                    }
                }
                None => {
                    for d in dst.chunks_mut(block) {
                        total = total + f(None, d)?;
                    }
                }
            }
            Ok(total)
        }
    }
}

/// `(0..n).map(f)` in index order, possibly computed concurrently.
pub(crate) fn map_indices<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}
