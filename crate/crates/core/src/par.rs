//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! thread pool; without it everything runs on the calling thread. Results
//! come back in input order either way, so callers see identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Whether [`map`] fans out across threads in this build.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
