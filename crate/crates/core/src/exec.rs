//! Deterministic fan-out of independent work items.
//!
//! An [`Executor`] evaluates `map(i)` for `i in 0..count` in any order or
//! concurrency it likes, but must hand results to `reduce` strictly in index
//! order. All reductions in this crate (gradient sums, distance-matrix
//! assembly) go through that ordered hook, so output is bit-identical for any
//! worker count.

/// Ordered map/reduce over `0..count`.
pub trait Executor: Sync {
    fn map_reduce<R, M, F>(&self, count: usize, map: M, reduce: F)
    where
        R: Send,
        M: Fn(usize) -> R + Sync,
        F: FnMut(usize, R);

    /// Number of items evaluated concurrently (1 for sequential execution).
    fn width(&self) -> usize {
        1
    }
}

/// Runs every item on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_reduce<R, M, F>(&self, count: usize, map: M, mut reduce: F)
    where
        R: Send,
        M: Fn(usize) -> R + Sync,
        F: FnMut(usize, R),
    {
        for i in 0..count {
            reduce(i, map(i));
        }
    }
}
