//! Replicate scheduling. Work is indexed by stream id and results are always
//! returned in index order, so the output does not depend on the number of
//! workers.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Attempts are evaluated in fixed-size batches when sampling until a target
/// count is accepted; the batch size never depends on the worker count.
pub const ATTEMPT_BATCH: u64 = 2048;

pub struct Runner {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl std::fmt::Debug for Runner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Runner({} workers)", self.workers)
    }
}

/// Minimum acceptance rate, enforced once `min_attempts` have been made.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceFloor {
    pub rate: f64,
    pub min_attempts: u64,
    pub max_attempts: u64,
}

impl Default for AcceptanceFloor {
    fn default() -> Self {
        AcceptanceFloor {
            rate: 1e-4,
            min_attempts: 20_000,
            max_attempts: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accepted<T> {
    pub items: Vec<T>,
    /// Number of attempts up to and including the last accepted one.
    pub attempts: u64,
}

impl<T> Accepted<T> {
    pub fn rate(&self) -> f64 {
        self.items.len() as f64 / self.attempts.max(1) as f64
    }
}

impl Runner {
    /// `workers = 0` uses one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::arg(format!("cannot start worker pool: {e}")))?;
        let workers = pool.current_num_threads();
        Ok(Runner { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(i)` for every `i` in `range`, in order. The first error in index
    /// order is returned.
    pub fn map<T, F>(&self, range: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let out: Vec<Result<T>> = self.pool.install(|| range.into_par_iter().map(&f).collect());
        out.into_iter().collect()
    }

    /// Runs attempts `0, 1, …` until `target` of them return `Some`.
    pub fn until_accepted<T, F>(&self, target: usize, floor: AcceptanceFloor, f: F) -> Result<Accepted<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<Option<T>> + Sync,
    {
        let mut items = Vec::with_capacity(target);
        let mut next = 0u64;
        let mut attempts = 0u64;
        while items.len() < target {
            if next >= floor.max_attempts {
                return Err(Error::AcceptanceFloor {
                    accepted: items.len(),
                    attempted: next as usize,
                    hint: "attempt budget exhausted; increase the cut-off level".into(),
                });
            }
            let end = (next + ATTEMPT_BATCH).min(floor.max_attempts);
            let batch = self.map(next..end, &f)?;
            for (k, r) in batch.into_iter().enumerate() {
                if let Some(v) = r {
                    items.push(v);
                    attempts = next + k as u64 + 1;
                    if items.len() == target {
                        break;
                    }
                }
            }
            next = end;
            if items.len() < target
                && next >= floor.min_attempts
                && (items.len() as f64) < floor.rate * next as f64
            {
                return Err(Error::AcceptanceFloor {
                    accepted: items.len(),
                    attempted: next as usize,
                    hint: format!(
                        "rate below {}; increase the cut-off level",
                        floor.rate
                    ),
                });
            }
        }
        Ok(Accepted { items, attempts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_does_not_depend_on_workers() {
        let f = |i: u64| Ok(i * i);
        let a = Runner::new(1).unwrap().map(0..1000, f).unwrap();
        let b = Runner::new(3).unwrap().map(0..1000, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[10], 100);
    }

    #[test]
    fn first_error_in_order() {
        let f = |i: u64| if i % 7 == 3 { Err(Error::arg(format!("{i}"))) } else { Ok(i) };
        let e = Runner::new(4).unwrap().map(0..100, f).unwrap_err();
        assert_eq!(e, Error::arg("3"));
    }

    #[test]
    fn accepts_in_stream_order() {
        let f = |i: u64| Ok(i.is_multiple_of(3).then_some(i));
        let r = Runner::new(2).unwrap().until_accepted(5, AcceptanceFloor::default(), f).unwrap();
        assert_eq!(r.items, vec![0, 3, 6, 9, 12]);
        assert_eq!(r.attempts, 13);
    }

    #[test]
    fn floor_is_enforced() {
        let floor = AcceptanceFloor {
            rate: 0.1,
            min_attempts: 4096,
            max_attempts: 1 << 20,
        };
        let f = |i: u64| Ok(i.is_multiple_of(1000).then_some(i));
        let e = Runner::new(1).unwrap().until_accepted(100, floor, f).unwrap_err();
        assert!(matches!(e, Error::AcceptanceFloor { .. }));
    }
}
