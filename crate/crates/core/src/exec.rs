//! Data-parallel execution helpers.
//!
//! Every per-pixel and per-seed loop in the crate goes through these helpers.
//! With the `parallel` feature (default) [`Exec::Parallel`] fans work out over
//! the rayon thread pool; without it, or with [`Exec::Sequential`], the same
//! closures run in order on the calling thread. Results never depend on the
//! mode: every work item is a pure function of its index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential execution.
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

impl Exec {
    /// Fills `buf` row by row. `f(row, row_slice)` receives disjoint rows of
    /// `width` elements.
    pub fn for_each_row<T, F>(self, buf: &mut [T], width: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => buf
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(row, slice)| f(row, slice)),
            _ => buf
                .chunks_mut(width)
                .enumerate()
                .for_each(|(row, slice)| f(row, slice)),
        }
    }

    /// Maps `f` over `0..n`, preserving index order in the output.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }
}
