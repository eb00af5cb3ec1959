//! Partitioned execution: per-partition tasks on a worker pool, a sequential
//! master phase that gathers and averages, and a one-to-many broadcast.
//!
//! Every round assembles its results in partition-index order, so outputs
//! never depend on how many workers ran the round or in which order the
//! partitions finished.

use std::fmt;
use std::ops::Deref;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mltable::{MLRow, MLTable};

/// Number of workers used when none is configured.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// A fixed-size pool of workers standing in for cluster nodes.
///
/// Cloning is cheap; clones share the same threads. A pool with a single
/// worker runs tasks inline on the calling thread.
#[derive(Clone)]
pub struct WorkerPool {
    workers: usize,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        let pool = if workers == 1 {
            None
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("mlkit-worker-{i}"))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Some(Arc::new(pool))
        };
        Ok(WorkerPool { workers, pool })
    }

    /// Pool sized to the detected parallelism of the host.
    pub fn with_default_workers() -> Self {
        WorkerPool::new(default_workers()).unwrap_or_else(|_| WorkerPool::serial())
    }

    pub fn serial() -> Self {
        WorkerPool {
            workers: 1,
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `task(i)` for every `i < count` and returns the results in index
    /// order. The first failing task (lowest index) aborts the round and is
    /// reported with its index.
    pub fn run<R, F>(&self, count: usize, task: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync,
    {
        let results: Vec<Result<R>> = match &self.pool {
            None => (0..count).map(&task).collect(),
            Some(pool) => pool.install(|| (0..count).into_par_iter().map(&task).collect()),
        };
        results
            .into_iter()
            .enumerate()
            .map(|(index, r)| {
                r.map_err(|e| Error::Partition {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Applies `task` to every element of `parts`, in parallel, returning the
    /// outputs in input order.
    pub fn map_slices<T, R, F>(&self, parts: &[T], task: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> Result<R> + Sync,
    {
        self.run(parts.len(), |i| task(i, &parts[i]))
    }

    /// One result per partition of `table`, ordered by partition index.
    pub fn map_partitions<R, F>(&self, table: &MLTable, task: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize, &[MLRow]) -> Result<R> + Sync,
    {
        self.map_slices(table.partitions(), |i, rows| task(i, rows.as_slice()))
    }
}

impl Default for WorkerPool {
    /// The process-wide shared pool sized to the detected parallelism.
    fn default() -> Self {
        static SHARED: OnceLock<WorkerPool> = OnceLock::new();
        SHARED.get_or_init(WorkerPool::with_default_workers).clone()
    }
}

impl fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WorkerPool")
            .field("workers", &self.workers)
            .finish()
    }
}

/// Weighted average `sum(w_i * v_i) / sum(w_i)` computed at the master.
///
/// Weights are normalized first and contributions are accumulated in
/// ascending partition order as offsets from the first vector, so a single
/// contributor, or any number of identical ones, is returned exactly.
pub fn gather_average(results: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let Some((first, _)) = results.first() else {
        return Err(Error::Degenerate("nothing to average".into()));
    };
    let len = first.len();
    let mut total = 0.0;
    for (i, (v, w)) in results.iter().enumerate() {
        if v.len() != len {
            return Err(Error::Dim(format!(
                "partition {i} returned {} values, expected {len}",
                v.len()
            )));
        }
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::Degenerate(format!(
                "invalid weight {w} at partition {i}"
            )));
        }
        total += w;
    }
    if total == 0.0 {
        return Err(Error::Degenerate("total weight is zero".into()));
    }
    let mut offset = vec![0.0; len];
    for (v, w) in &results[1..] {
        if *w == 0.0 {
            continue;
        }
        let alpha = w / total;
        for ((o, x), x0) in offset.iter_mut().zip(v).zip(first) {
            *o += alpha * (x - x0);
        }
    }
    // skipping zero offsets keeps the sign of a -0.0 entry intact
    Ok(first
        .iter()
        .zip(&offset)
        .map(|(&x0, &o)| if o == 0.0 { x0 } else { x0 + o })
        .collect())
}

/// A read-only value shared with every partition task of a round.
#[derive(Debug)]
pub struct Broadcast<T>(Arc<T>);

impl<T> Broadcast<T> {
    pub fn value(&self) -> &T {
        &self.0
    }

    /// True if both handles refer to the same broadcast value.
    pub fn same_as(&self, other: &Broadcast<T>) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl<T> Clone for Broadcast<T> {
    fn clone(&self) -> Self {
        Broadcast(Arc::clone(&self.0))
    }
}

impl<T> Deref for Broadcast<T> {
    type Target = T;

    fn deref(&self) -> &T {
        &self.0
    }
}

/// Freezes `value` so every task in the next round observes the same copy.
pub fn broadcast<T>(value: T) -> Broadcast<T> {
    Broadcast(Arc::new(value))
}
