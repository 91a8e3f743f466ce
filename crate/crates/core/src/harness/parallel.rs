//! Index-parallel map. With the `parallel` feature it runs on rayon; without
//! it, the same closure is applied sequentially. Output order always follows
//! the index, so results never depend on scheduling.

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
pub fn map_indices<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Runs `op` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`. Without the `parallel` feature the thread count
/// is ignored.
#[cfg(feature = "parallel")]
pub fn with_threads<T, F>(threads: Option<usize>, op: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(op()),
        Some(0) => Err(Error::invalid("thread count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(op))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<T, F>(threads: Option<usize>, op: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if threads == Some(0) {
        return Err(Error::invalid("thread count must be at least 1"));
    }
    Ok(op())
}
