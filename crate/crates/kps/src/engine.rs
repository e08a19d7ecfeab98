//! Single-node shard-parallel execution of map phases.
//!
//! Groups are partitioned into contiguous shards; a pool of workers pulls
//! shards off a shared counter, computes per-group results into a per-shard
//! buffer, and the buffers are reassembled in shard order. Because shard
//! boundaries are a pure function of `(N, num_shards)` and every result
//! lands at its group's position, the output is bitwise independent of the
//! number of workers and of how the scheduler interleaved them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use kps_core::Executor;

/// Deterministic partition of `0..num_groups` into contiguous shards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardPlan {
    num_groups: usize,
    num_shards: usize,
    workers: usize,
}

impl ShardPlan {
    /// Builds a plan; shard and worker counts are clamped to at least 1,
    /// and shards never outnumber groups (except for empty inputs).
    pub fn new(num_groups: usize, num_shards: usize, workers: usize) -> Self {
        ShardPlan {
            num_groups,
            num_shards: num_shards.max(1).min(num_groups.max(1)),
            workers: workers.max(1),
        }
    }

    #[inline]
    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    #[inline]
    pub fn num_shards(&self) -> usize {
        self.num_shards
    }

    #[inline]
    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Half-open group range of shard `s`: the first `N % num_shards`
    /// shards carry one extra group.
    pub fn shard_range(&self, shard: usize) -> Range<usize> {
        let base = self.num_groups / self.num_shards;
        let extra = self.num_groups % self.num_shards;
        let start = shard * base + shard.min(extra);
        let len = base + usize::from(shard < extra);
        start..(start + len).min(self.num_groups)
    }
}

/// Worker-pool executor for the bulk-synchronous map phases.
///
/// `shards_per_worker` controls scheduling granularity (more shards give
/// better balance for skewed groups); it never affects results.
#[derive(Debug, Clone, Copy)]
pub struct ParallelExecutor {
    workers: usize,
    shards_per_worker: usize,
}

impl ParallelExecutor {
    pub fn new(workers: usize) -> Self {
        ParallelExecutor {
            workers: workers.max(1),
            shards_per_worker: 4,
        }
    }

    pub fn with_shards_per_worker(workers: usize, shards_per_worker: usize) -> Self {
        ParallelExecutor {
            workers: workers.max(1),
            shards_per_worker: shards_per_worker.max(1),
        }
    }

    #[inline]
    pub fn workers(&self) -> usize {
        self.workers
    }

    fn plan(&self, count: usize) -> ShardPlan {
        ShardPlan::new(count, self.workers * self.shards_per_worker, self.workers)
    }
}

/// Runs the shard loop: workers pull shard indices from a shared counter
/// and send back `(shard, results)`; the caller reassembles in shard order.
fn run_shards<T, S, I, F>(plan: &ShardPlan, init: &I, map_fn: &F) -> Vec<Vec<T>>
where
    T: Send,
    S: Send,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, usize) -> T + Sync,
{
    let next_shard = AtomicUsize::new(0);
    let (sender, receiver) = mpsc::channel::<(usize, Vec<T>)>();
    let mut shards: Vec<Option<Vec<T>>> = (0..plan.num_shards()).map(|_| None).collect();

    std::thread::scope(|scope| {
        for _ in 0..plan.workers() {
            let sender = sender.clone();
            let next_shard = &next_shard;
            scope.spawn(move || {
                let mut scratch = init();
                loop {
                    let shard = next_shard.fetch_add(1, Ordering::Relaxed);
                    if shard >= plan.num_shards() {
                        break;
                    }
                    let range = plan.shard_range(shard);
                    let mut buffer = Vec::with_capacity(range.len());
                    for i in range {
                        buffer.push(map_fn(&mut scratch, i));
                    }
                    if sender.send((shard, buffer)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(sender);
        for (shard, buffer) in receiver {
            shards[shard] = Some(buffer);
        }
    });

    shards
        .into_iter()
        .map(|s| s.expect("every shard completes"))
        .collect()
}

impl Executor for ParallelExecutor {
    fn map_groups_with<T, S, I, F>(&self, count: usize, init: I, map_fn: F) -> Vec<T>
    where
        T: Send,
        S: Send,
        I: Fn() -> S + Sync,
        F: Fn(&mut S, usize) -> T + Sync,
    {
        if count == 0 {
            return Vec::new();
        }
        let plan = self.plan(count);
        let mut out = Vec::with_capacity(count);
        for buffer in run_shards(&plan, &init, &map_fn) {
            out.extend(buffer);
        }
        out
    }
}

#[derive(Debug)]
pub enum EngineError {
    /// The map function panicked on the named group (1-based id). The
    /// smallest failing group id is reported.
    MapFailed { group_id: u32 },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::MapFailed { group_id } => {
                write!(f, "map function failed on group {group_id}")
            }
        }
    }
}

impl std::error::Error for EngineError {}

/// The generic keyed map/reduce surface of the engine.
///
/// Every group in `0..plan.num_groups()` is mapped exactly once; for each
/// key, the reducer receives the values ordered by (shard index, emission
/// order within the shard) — which for contiguous shards is simply group
/// order — so the whole computation is deterministic regardless of worker
/// count. A panicking map aborts the call with the smallest failing group
/// id.
pub fn map_reduce<K, V, R, M, Red>(
    plan: &ShardPlan,
    map_fn: M,
    mut reduce_fn: Red,
) -> Result<BTreeMap<K, R>, EngineError>
where
    K: Ord + Send,
    V: Send,
    M: Fn(usize) -> Vec<(K, V)> + Sync,
    Red: FnMut(&K, Vec<V>) -> R,
{
    let mapped: Vec<Result<Vec<(K, V)>, ()>> = run_shards(plan, &|| (), &|(), i| {
        catch_unwind(AssertUnwindSafe(|| map_fn(i))).map_err(drop)
    })
    .into_iter()
    .flatten()
    .collect();

    let mut grouped: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (index, result) in mapped.into_iter().enumerate() {
        match result {
            Ok(emissions) => {
                for (key, value) in emissions {
                    grouped.entry(key).or_default().push(value);
                }
            }
            Err(()) => {
                return Err(EngineError::MapFailed {
                    group_id: index as u32 + 1,
                })
            }
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(key, values)| {
            let reduced = reduce_fn(&key, values);
            (key, reduced)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shard_ranges_partition_exactly() {
        for (n, shards) in [(10, 3), (4, 2), (7, 7), (3, 64), (1, 1), (100, 8)] {
            let plan = ShardPlan::new(n, shards, 2);
            let mut seen = Vec::new();
            for s in 0..plan.num_shards() {
                seen.extend(plan.shard_range(s));
            }
            assert_eq!(seen, (0..n).collect::<Vec<_>>(), "n={n} shards={shards}");
        }
    }

    #[test]
    fn reduce_sees_values_in_group_order() {
        let plan = ShardPlan::new(4, 2, 2);
        let out = map_reduce(
            &plan,
            |i| vec![(1u32, i as u32 + 1)],
            |_, values| values,
        )
        .unwrap();
        assert_eq!(out[&1], vec![1, 2, 3, 4]);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let inputs: Vec<f64> = (0..1000).map(|i| (i as f64) * 0.37).collect();
        let baseline = ParallelExecutor::new(1)
            .map_groups(inputs.len(), |i| inputs[i] * inputs[i] + 1.0);
        for workers in [2, 8] {
            let got = ParallelExecutor::new(workers)
                .map_groups(inputs.len(), |i| inputs[i] * inputs[i] + 1.0);
            assert_eq!(baseline, got);
        }
    }

    #[test]
    fn empty_and_undersized_inputs() {
        let exec = ParallelExecutor::new(4);
        let empty: Vec<usize> = exec.map_groups(0, |i| i);
        assert!(empty.is_empty());
        // more shards than groups
        let plan = ShardPlan::new(3, 64, 8);
        let out = map_reduce(&plan, |i| vec![((), i)], |_, v| v).unwrap();
        assert_eq!(out[&()], vec![0, 1, 2]);
    }

    #[test]
    fn map_panic_aborts_with_group_id() {
        let plan = ShardPlan::new(5, 2, 2);
        let err = map_reduce(
            &plan,
            |i| {
                if i == 3 {
                    panic!("boom");
                }
                vec![(0u8, i)]
            },
            |_, v: Vec<usize>| v.len(),
        )
        .unwrap_err();
        match err {
            EngineError::MapFailed { group_id } => assert_eq!(group_id, 4),
        }
    }
}
