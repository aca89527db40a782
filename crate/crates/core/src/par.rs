//! Index-parallel map with a sequential fallback.
//!
//! Every data-parallel loop in the crate goes through [`map_indexed`]. Each
//! item is computed independently and results come back in index order, so
//! callers that reduce the output sequentially get bitwise identical results
//! for any worker count, and for builds without the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the work is done on the calling thread.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 256;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n < MIN_PARALLEL_LEN {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Whether this build evaluates loops on the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
