//! Synthetic instance generation.
//!
//! Profits are uniform on `[0,1]`. Costs follow the configured law:
//! `Uniform01`, or `Mixed` which draws each coefficient from `[0,1]` or
//! `[0,10]` with equal probability. Budgets are set to `tightness` times
//! the expected per-resource usage when every group selects up to its cap
//! `C` (the root capacity of the local pattern): `tightness * N * C *
//! mean_cost` for dense costs, where each selected item consumes from every
//! knapsack, and `tightness * N * C * mean_cost / K` for diagonal costs,
//! where a selected item consumes only from its own. `tightness = 0.5`
//! therefore admits roughly half of the unconstrained demand either way.
//!
//! Every group draws from its own counter-derived ChaCha stream, so
//! generation is reproducible for a given seed regardless of how groups are
//! partitioned into shards.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CostData, Instance, LocalConstraint, LocalConstraintSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    Dense,
    Diag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostLaw {
    Uniform01,
    /// Uniform on `[0,1]` or `[0,10]`, each with probability one half.
    Mixed,
}

impl CostLaw {
    pub fn mean(self) -> f64 {
        match self {
            CostLaw::Uniform01 => 0.5,
            CostLaw::Mixed => 0.5 * 0.5 + 0.5 * 5.0,
        }
    }
}

/// Shape of the shared local constraint template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalPattern {
    /// One constraint over all items with the given capacity (`C=[q]`).
    Cap(u32),
    /// Two disjoint capacity-2 halves nested in a capacity-3 root over all
    /// items (`C=[2,2,3]`).
    TwoTwoThree,
}

impl LocalPattern {
    /// Effective per-group selection cap (root capacity).
    pub fn root_capacity(self) -> u32 {
        match self {
            LocalPattern::Cap(q) => q,
            LocalPattern::TwoTwoThree => 3,
        }
    }

    pub fn constraint_set(self, num_items: usize) -> LocalConstraintSet {
        match self {
            LocalPattern::Cap(q) => LocalConstraintSet::single_cap(num_items, q),
            LocalPattern::TwoTwoThree => {
                let m = num_items as u32;
                let half = m.div_ceil(2);
                LocalConstraintSet::new(alloc::vec![
                    LocalConstraint::new((1..=half).collect(), 2),
                    LocalConstraint::new((half + 1..=m).collect(), 2),
                    LocalConstraint::new((1..=m).collect(), 3),
                ])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub num_groups: usize,
    pub num_items: usize,
    pub num_resources: usize,
    pub cost_mode: CostMode,
    pub cost_law: CostLaw,
    pub pattern: LocalPattern,
    pub tightness: f64,
    pub seed: u64,
}

impl GenSpec {
    /// Sparse benchmark shape: one-to-one items and knapsacks under a
    /// single cap.
    pub fn sparse(num_items: usize, num_groups: usize, cap: u32, seed: u64) -> Self {
        GenSpec {
            num_groups,
            num_items,
            num_resources: num_items,
            cost_mode: CostMode::Diag,
            cost_law: CostLaw::Uniform01,
            pattern: LocalPattern::Cap(cap),
            tightness: 0.5,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenError {
    ZeroDimension(&'static str),
    DiagShape { num_items: usize, num_resources: usize },
    BadTightness(f64),
    /// The 2,2,3 pattern needs at least two items to split.
    PatternTooNarrow,
    BadCapacity,
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::ZeroDimension(what) => write!(f, "{what} must be at least 1"),
            GenError::DiagShape {
                num_items,
                num_resources,
            } => write!(
                f,
                "diag cost mode requires M == K, got M = {num_items}, K = {num_resources}"
            ),
            GenError::BadTightness(t) => write!(f, "tightness must be positive, got {t}"),
            GenError::PatternTooNarrow => write!(f, "local pattern 2,2,3 needs at least 2 items"),
            GenError::BadCapacity => write!(f, "local capacity must be at least 1"),
        }
    }
}

fn group_rng(seed: u64, group_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(group_index as u64 + 1);
    rng
}

fn draw_cost(rng: &mut ChaCha8Rng, law: CostLaw) -> f64 {
    match law {
        CostLaw::Uniform01 => rng.random::<f64>(),
        CostLaw::Mixed => {
            let wide = rng.random::<bool>();
            let v = rng.random::<f64>();
            if wide {
                10.0 * v
            } else {
                v
            }
        }
    }
}

/// Generates a deterministic instance for the given spec.
pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    if spec.num_groups == 0 {
        return Err(GenError::ZeroDimension("N"));
    }
    if spec.num_items == 0 {
        return Err(GenError::ZeroDimension("M"));
    }
    if spec.num_resources == 0 {
        return Err(GenError::ZeroDimension("K"));
    }
    if !(spec.tightness > 0.0) {
        return Err(GenError::BadTightness(spec.tightness));
    }
    match spec.pattern {
        LocalPattern::Cap(0) => return Err(GenError::BadCapacity),
        LocalPattern::TwoTwoThree if spec.num_items < 2 => {
            return Err(GenError::PatternTooNarrow)
        }
        _ => {}
    }
    if spec.cost_mode == CostMode::Diag && spec.num_items != spec.num_resources {
        return Err(GenError::DiagShape {
            num_items: spec.num_items,
            num_resources: spec.num_resources,
        });
    }

    let (n, m, k) = (spec.num_groups, spec.num_items, spec.num_resources);
    let mut profits = Vec::with_capacity(n * m);
    let costs = match spec.cost_mode {
        CostMode::Dense => {
            let mut all = Vec::with_capacity(n * m * k);
            for i in 0..n {
                let mut rng = group_rng(spec.seed, i);
                for _ in 0..m {
                    profits.push(rng.random::<f64>());
                }
                for _ in 0..m * k {
                    all.push(draw_cost(&mut rng, spec.cost_law));
                }
            }
            CostData::Dense(all)
        }
        CostMode::Diag => {
            let mut all = Vec::with_capacity(n * m);
            for i in 0..n {
                let mut rng = group_rng(spec.seed, i);
                for _ in 0..m {
                    profits.push(rng.random::<f64>());
                }
                for _ in 0..m {
                    all.push(draw_cost(&mut rng, spec.cost_law));
                }
            }
            CostData::Diag(all)
        }
    };

    let cap = spec.pattern.root_capacity() as f64;
    let full_demand_per_resource = match spec.cost_mode {
        CostMode::Dense => n as f64 * cap * spec.cost_law.mean(),
        CostMode::Diag => n as f64 * cap * spec.cost_law.mean() / k as f64,
    };
    let budget = spec.tightness * full_demand_per_resource;
    let budgets = alloc::vec![budget; k];

    let locals = spec.pattern.constraint_set(m);
    Ok(Instance::new(n, m, budgets, locals, profits, costs)
        .expect("generated dimensions are consistent"))
}
