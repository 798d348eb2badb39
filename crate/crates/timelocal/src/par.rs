//! Data-parallel map helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the indexed maps run on the rayon
//! global pool; without it they degrade to plain iterators. The `*_seq`
//! twins are always sequential so benchmarks can compare both on one build.
//! Results are collected in index order either way, so outputs are
//! identical bit for bit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fallible map over `0..n`; the first error wins.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential twin of [`try_map_indexed`].
pub fn try_map_indexed_seq<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    F: Fn(usize) -> Result<T, E>,
{
    (0..n).map(f).collect()
}
