//! Sequential or data-parallel execution of independent batches.
//!
//! Results always come back in batch order, so any reduction over them is
//! the same whichever mode ran. Without the `parallel` feature,
//! [`Execution::Parallel`] runs sequentially.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Splits `0..n` into consecutive ranges of at most `batch` items and
    /// maps each one, preserving order.
    pub fn map_batches<T, F>(self, n: usize, batch: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        let batch = batch.max(1);
        let count = n.div_ceil(batch);
        let range = move |i: usize| i * batch..((i + 1) * batch).min(n);
        self.map_indices(count, |i| f(range(i)))
    }

    /// Maps `f` over `0..count`, preserving order.
    pub fn map_indices<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(f).collect(),
            Execution::Parallel => parallel_map(count, f),
        }
    }

    /// Whether this build can actually run batches concurrently.
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
