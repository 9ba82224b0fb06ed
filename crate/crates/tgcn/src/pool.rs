//! Scoped-thread executor with an index-ordered reduction.

use std::thread;

use tgcn_core::Executor;

/// Runs `map` on up to `workers` threads. Results are handed to `reduce` in
/// index order, so anything accumulated there is independent of the worker
/// count.
#[derive(Debug, Clone, Copy)]
pub struct Threads {
    workers: usize,
}

impl Threads {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }
}

impl Executor for Threads {
    fn map_reduce<R, M, F>(&self, count: usize, map: M, mut reduce: F)
    where
        R: Send,
        M: Fn(usize) -> R + Sync,
        F: FnMut(usize, R),
    {
        if self.workers == 1 || count < 2 {
            for i in 0..count {
                reduce(i, map(i));
            }
            return;
        }
        // Waves bound the number of results held at once.
        let wave = self.workers * 2;
        let map = &map;
        let mut start = 0;
        while start < count {
            let end = (start + wave).min(count);
            let per = (end - start).div_ceil(self.workers);
            let chunks: Vec<Vec<R>> = thread::scope(|s| {
                let handles: Vec<_> = (start..end)
                    .step_by(per)
                    .map(|lo| {
                        let hi = (lo + per).min(end);
                        s.spawn(move || (lo..hi).map(map).collect::<Vec<R>>())
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect()
            });
            for (i, r) in (start..end).zip(chunks.into_iter().flatten()) {
                reduce(i, r);
            }
            start = end;
        }
    }

    fn width(&self) -> usize {
        self.workers
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_order_matches_sequential() {
        let vals: Vec<f64> = (0..103).map(|i| 1.0 / (i as f64 + 0.3)).collect();
        let sum_with = |w| {
            let mut acc = 0.0;
            let mut seen = Vec::new();
            Threads::new(w).map_reduce(vals.len(), |i| vals[i].sin(), |i, r| {
                seen.push(i);
                acc += r;
            });
            assert_eq!(seen, (0..vals.len()).collect::<Vec<_>>());
            acc
        };
        let one = sum_with(1);
        for w in [2, 3, 8] {
            assert_eq!(one.to_bits(), sum_with(w).to_bits());
        }
    }
}
