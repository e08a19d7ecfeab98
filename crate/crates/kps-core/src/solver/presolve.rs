//! Warm-starting the multipliers from a sampled sub-instance.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::Executor;
use crate::model::Instance;

use super::{scd_solve, Multipliers, ScdConfig, SolveError};

/// Solves a uniformly sampled sub-instance (without replacement, budgets
/// scaled by `sample_size / N`) with SCD to convergence and returns its
/// final multipliers as a starting point for the full run.
///
/// Sampling `N` groups reproduces the full instance exactly (the budget
/// scale is then 1), so the result degenerates to the full solve's
/// multipliers.
pub fn presolve<E: Executor>(
    inst: &Instance,
    sample_size: usize,
    seed: u64,
    exec: &E,
) -> Result<Multipliers, SolveError> {
    let n = inst.num_groups();
    let size = sample_size.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, n, size).into_vec();
    indices.sort_unstable();

    let scale = size as f64 / n as f64;
    let budgets: Vec<f64> = inst.budgets().iter().map(|&b| b * scale).collect();
    let sub = inst.subset(&indices, budgets);

    let cfg = ScdConfig::default();
    let (multipliers, _, _) = scd_solve(&sub, &cfg, exec)?;
    Ok(Multipliers {
        values: multipliers.values,
        iteration: 0,
    })
}
