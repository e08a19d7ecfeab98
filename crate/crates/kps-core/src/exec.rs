//! Execution abstraction for the bulk-synchronous map phases.
//!
//! Solvers hand an [`Executor`] a pure per-group closure and require the
//! results back in group order; everything downstream (reduces, float sums)
//! is then independent of how the work was scheduled. The in-crate
//! [`Sequential`] executor just runs the loop; the `kps` companion crate
//! provides a sharded thread-pool implementation with the same contract.

use alloc::vec::Vec;

/// Runs a pure function over every group index and returns the results in
/// group order: `out[i] == map_fn(scratch, i)`.
///
/// `init` builds a scratch value once per worker; `map_fn` may reuse it
/// across calls but the result must not depend on which groups previously
/// touched it, or determinism across parallelism degrees is lost.
pub trait Executor {
    fn map_groups_with<T, S, I, F>(&self, count: usize, init: I, map_fn: F) -> Vec<T>
    where
        T: Send,
        S: Send,
        I: Fn() -> S + Sync,
        F: Fn(&mut S, usize) -> T + Sync;

    /// Scratch-free convenience form.
    fn map_groups<T, F>(&self, count: usize, map_fn: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        self.map_groups_with(count, || (), move |(), i| map_fn(i))
    }
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_groups_with<T, S, I, F>(&self, count: usize, init: I, map_fn: F) -> Vec<T>
    where
        T: Send,
        S: Send,
        I: Fn() -> S + Sync,
        F: Fn(&mut S, usize) -> T + Sync,
    {
        let mut scratch = init();
        (0..count).map(|i| map_fn(&mut scratch, i)).collect()
    }
}
