//! Data-parallel helpers.
//!
//! With the `parallel` feature, [`Parallelism::Parallel`] fans work out on the
//! current rayon pool. Without it every request runs sequentially. Results are
//! always collected in index order, so output never depends on the mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether work actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(n: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Sums `f(i)` over `0..n` as integers, possibly in parallel.
pub fn count_indexed<F>(n: usize, mode: Parallelism, f: F) -> u64
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().filter(|&i| f(i)).count() as u64;
    }
    let _ = mode;
    (0..n).filter(|&i| f(i)).count() as u64
}
