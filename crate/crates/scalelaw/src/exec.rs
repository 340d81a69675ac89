//! Data-parallel map with a sequential fallback.
//!
//! All embarrassingly parallel loops (fit restarts, CV folds, extrapolation
//! corners, synthetic grids) go through [`map_indexed`]. With the `parallel`
//! feature (default) the map runs on the rayon global pool; without it the
//! same closure runs on a plain iterator. Results are collected in index
//! order and every reduction happens sequentially afterwards, so both builds
//! produce bit-identical output.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Caps the rayon pool at `n` threads. Call at most once, before any parallel
/// work; later calls are ignored (the global pool is build-once). No-op in
/// sequential builds.
#[cfg(feature = "parallel")]
pub fn limit_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn limit_threads(_n: usize) {}
