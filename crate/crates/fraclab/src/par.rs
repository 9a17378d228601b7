//! Data-parallel helpers with a sequential fallback.
//!
//! The hot loops (stiffness row integration, Gramian entries, kernel tables)
//! are embarrassingly parallel over independent output elements, so results
//! are bitwise identical with and without the `parallel` feature. Thread
//! count is controlled by `RAYON_NUM_THREADS` only.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sequential twin of [`map_indexed`], kept unconditionally for benchmarks
/// comparing the two execution paths.
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}
