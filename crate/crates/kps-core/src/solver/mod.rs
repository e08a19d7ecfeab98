//! Iterative dual solvers.
//!
//! Both solvers alternate a parallel map phase (solve every group's
//! subproblem at the current multipliers) with a single-threaded reduce and
//! multiplier update, in a bulk-synchronous loop:
//!
//! * [`dd_solve`] — dual descent: a projected subgradient step
//!   `lambda_k <- max(0, lambda_k + alpha * (R_k - B_k))` per iteration.
//! * [`scd_solve`] — synchronous coordinate descent: every coordinate is
//!   moved simultaneously to the smallest candidate value whose predicted
//!   usage still fits the budget, using the candidate emissions of the
//!   `candidates` module.
//!
//! [`presolve`] estimates a warm-start multiplier vector from a sampled
//! sub-instance; [`postprocess`] restores feasibility of a converged
//! solution by zeroing whole groups in order of their dual contribution.

mod dd;
mod presolve;
mod reduce;
mod scd;

pub use dd::dd_solve;
pub use presolve::presolve;
pub use reduce::{bucket_id, bucketed_reduce, exact_reduce, exact_reduce_outcome, ReduceOutcome};
pub use scd::scd_solve;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::exec::Executor;
use crate::model::{Assignment, Instance};
use crate::subproblem::{adjusted_profits_into, GreedyScratch};

/// Largest per-group item count accepted by the general (pairwise
/// intersection) candidate path; it is quadratic in `M` per coordinate.
pub const GENERAL_PATH_ITEM_LIMIT: usize = 512;

/// Relative tolerance under which consecutive dual values count as a
/// plateau.
pub const DUAL_PLATEAU_REL: f64 = 1e-9;

/// Dual prices, one per global constraint, with the iteration that
/// produced them. Always non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub values: Vec<f64>,
    pub iteration: u32,
}

/// Dual-descent configuration. `alpha` is the subgradient step size.
#[derive(Debug, Clone, PartialEq)]
pub struct DdConfig {
    pub alpha: f64,
    pub max_iters: u32,
    pub tol: f64,
    /// Starting multipliers; all ones when absent.
    pub initial_lambda: Option<Vec<f64>>,
}

impl Default for DdConfig {
    fn default() -> Self {
        DdConfig {
            alpha: 1e-3,
            max_iters: 500,
            tol: 1e-6,
            initial_lambda: None,
        }
    }
}

/// Reduce strategy for the SCD threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bucketing {
    /// Full sort of the emissions; exact threshold.
    #[default]
    Off,
    /// Exponential bucketing around the previous multiplier with the given
    /// minimal bucket size, interpolating inside the target bucket.
    Delta(f64),
}

/// Warm-start strategy for SCD.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Presolve {
    #[default]
    Off,
    /// Solve a uniformly sampled sub-instance with proportionally scaled
    /// budgets and start from its multipliers.
    Sample { size: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScdConfig {
    pub max_iters: u32,
    pub tol: f64,
    pub bucketing: Bucketing,
    pub presolve: Presolve,
    /// Starting multipliers; all ones when absent (ignored when presolving).
    pub initial_lambda: Option<Vec<f64>>,
}

impl Default for ScdConfig {
    fn default() -> Self {
        ScdConfig {
            max_iters: 100,
            tol: 1e-6,
            bucketing: Bucketing::Off,
            presolve: Presolve::Off,
            initial_lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// The dual value became non-finite; for DD this usually means the
    /// learning rate is too large.
    Divergence { iteration: u32 },
    /// The instance is neither sparse-eligible nor small enough for the
    /// general candidate path.
    GroupTooLarge { num_items: usize, limit: usize },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Divergence { iteration } => write!(
                f,
                "dual value became non-finite at iteration {iteration} (learning rate too large?)"
            ),
            SolveError::GroupTooLarge { num_items, limit } => write!(
                f,
                "general candidate path supports at most {limit} items per group, got {num_items}"
            ),
        }
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u32,
    pub lambda: Vec<f64>,
    pub dual_value: f64,
    pub primal_value: f64,
    pub usage: Vec<f64>,
    pub max_violation_ratio: f64,
}

/// Full solve trace plus the final certificate data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Groups zeroed by post-processing (filled in by the caller that runs
    /// [`postprocess`]).
    pub removed_groups: usize,
    /// Per-resource budget perturbation `delta_k` under which the final
    /// pre-postprocessing solution is exactly optimal: the violation
    /// overshoot, plus the unused slack wherever the price is zero.
    pub perturbation_slack: Vec<f64>,
    /// Sparse-path diagnostics: items with positive profit above the
    /// selection boundary but zero cost, which no finite price excludes.
    pub zero_cost_skips: u64,
}

impl SolveReport {
    pub fn final_record(&self) -> &IterationRecord {
        self.iterations.last().expect("solve records at least one iteration")
    }

    /// Number of multiplier updates performed (one less than trace rows).
    pub fn update_count(&self) -> u32 {
        self.iterations.len() as u32 - 1
    }

    /// Tightest dual upper bound seen across the trace.
    pub fn min_dual(&self) -> f64 {
        self.iterations
            .iter()
            .map(|r| r.dual_value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// True once the multipliers or the dual value have settled: the last two
/// recorded multiplier vectors differ by at most `tol` relative to
/// `max(lambda, 1)` in every coordinate, or the dual value is unchanged
/// within [`DUAL_PLATEAU_REL`] over the last three records.
pub fn convergence_check(records: &[IterationRecord], tol: f64) -> bool {
    let n = records.len();
    if n < 2 {
        return false;
    }
    let (prev, curr) = (&records[n - 2], &records[n - 1]);
    let lambda_settled = curr
        .lambda
        .iter()
        .zip(&prev.lambda)
        .all(|(&c, &p)| (c - p).abs() <= tol * p.max(1.0));
    if lambda_settled {
        return true;
    }
    if n >= 3 {
        let tail = &records[n - 3..];
        let plateau = tail.windows(2).all(|w| {
            (w[1].dual_value - w[0].dual_value).abs()
                <= DUAL_PLATEAU_REL * w[0].dual_value.abs().max(1.0)
        });
        if plateau {
            return true;
        }
    }
    false
}

/// Per-group outcome of one evaluation phase.
pub(crate) struct GroupEval {
    pub dual: f64,
    pub primal: f64,
    pub usage: Vec<f64>,
    pub selected: Vec<bool>,
}

/// Aggregated outcome of evaluating all groups at fixed multipliers.
pub(crate) struct EvalPhase {
    pub dual: f64,
    pub primal: f64,
    pub usage: Vec<f64>,
    pub evals: Vec<GroupEval>,
}

#[derive(Default)]
struct EvalScratch {
    values: Vec<f64>,
    greedy: GreedyScratch,
}

/// Solves every group at `lambda` with the greedy subproblem solver and
/// aggregates usage, dual and primal contributions in group order.
pub(crate) fn evaluate_lambda<E: Executor>(
    inst: &Instance,
    lambda: &[f64],
    exec: &E,
) -> EvalPhase {
    let m = inst.num_items();
    let k = inst.num_resources();
    let locals = inst.locals();
    let evals = exec.map_groups_with(
        inst.num_groups(),
        EvalScratch::default,
        move |scratch, i| {
            let g = inst.group(i);
            scratch.values.resize(m, 0.0);
            adjusted_profits_into(&g, lambda, &mut scratch.values);
            let mut selected = vec![false; m];
            scratch.greedy.select(&scratch.values, locals, &mut selected);
            let mut usage = vec![0.0; k];
            g.accumulate_usage(&selected, &mut usage);
            let mut primal = 0.0;
            for (j, &sel) in selected.iter().enumerate() {
                if sel {
                    primal += g.profits[j];
                }
            }
            let mut priced = 0.0;
            for (&l, &u) in lambda.iter().zip(&usage) {
                priced += l * u;
            }
            GroupEval {
                dual: primal - priced,
                primal,
                usage,
                selected,
            }
        },
    );

    let mut usage = vec![0.0; k];
    let mut dual = 0.0;
    let mut primal = 0.0;
    for e in &evals {
        for (acc, &u) in usage.iter_mut().zip(&e.usage) {
            *acc += u;
        }
        dual += e.dual;
        primal += e.primal;
    }
    for (&l, &b) in lambda.iter().zip(inst.budgets()) {
        dual += l * b;
    }
    EvalPhase {
        dual,
        primal,
        usage,
        evals,
    }
}

impl EvalPhase {
    pub(crate) fn max_violation_ratio(&self, budgets: &[f64]) -> f64 {
        max_violation_ratio(&self.usage, budgets)
    }

    pub(crate) fn into_assignment(self, inst: &Instance) -> Assignment {
        let mut assignment =
            Assignment::empty(inst.num_groups(), inst.num_items(), inst.num_resources());
        for (i, e) in self.evals.into_iter().enumerate() {
            assignment.group_mut(i).copy_from_slice(&e.selected);
        }
        assignment.usage = self.usage;
        assignment
    }

    pub(crate) fn record(&self, iteration: u32, lambda: &[f64], budgets: &[f64]) -> IterationRecord {
        IterationRecord {
            iteration,
            lambda: lambda.to_vec(),
            dual_value: self.dual,
            primal_value: self.primal,
            usage: self.usage.clone(),
            max_violation_ratio: self.max_violation_ratio(budgets),
        }
    }
}

/// Largest clipped violation ratio `(R_k - B_k) / B_k` over all resources.
pub fn max_violation_ratio(usage: &[f64], budgets: &[f64]) -> f64 {
    usage
        .iter()
        .zip(budgets)
        .map(|(&r, &b)| ((r - b) / b).max(0.0))
        .fold(0.0, f64::max)
}

pub(crate) fn perturbation_slack(usage: &[f64], budgets: &[f64], lambda: &[f64]) -> Vec<f64> {
    usage
        .iter()
        .zip(budgets)
        .zip(lambda)
        .map(|((&r, &b), &l)| {
            let mut delta = (r - b).max(0.0);
            if l == 0.0 {
                delta += (b - r).max(0.0);
            }
            delta
        })
        .collect()
}

pub(crate) fn initial_lambda(config_initial: &Option<Vec<f64>>, num_resources: usize) -> Vec<f64> {
    match config_initial {
        Some(values) => values.iter().map(|v| v.max(0.0)).collect(),
        None => vec![1.0; num_resources],
    }
}

/// Lagrangian dual objective at `lambda`: the sum of every group's maximal
/// adjusted profit plus the priced budgets. Upper-bounds the primal optimum
/// for any non-negative `lambda` (weak duality).
pub fn dual_value<E: Executor>(inst: &Instance, lambda: &[f64], exec: &E) -> f64 {
    evaluate_lambda(inst, lambda, exec).dual
}

/// Solves every group's subproblem at fixed multipliers and returns the
/// resulting assignment (with aggregate usage) and the dual objective.
/// This is one map phase of the solvers, exposed for applying externally
/// obtained prices -- e.g. a warm start -- directly to an instance.
pub fn solve_at<E: Executor>(inst: &Instance, lambda: &[f64], exec: &E) -> (Assignment, f64) {
    let phase = evaluate_lambda(inst, lambda, exec);
    let dual = phase.dual;
    (phase.into_assignment(inst), dual)
}

/// Result of [`postprocess`].
#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessResult {
    pub assignment: Assignment,
    /// Groups whose selections were reset to zero.
    pub removed_groups: usize,
}

/// Restores global feasibility by resetting whole groups to zero in
/// non-decreasing order of their cost-adjusted profit (ties by ascending
/// group id) until every budget holds. Returns the input unchanged (with
/// freshly recomputed usage) when it is already feasible.
pub fn postprocess(inst: &Instance, assignment: &Assignment, lambda: &[f64]) -> PostprocessResult {
    let mut a = assignment.clone();
    a.recompute_usage(inst);
    if a.globally_feasible(inst.budgets()) {
        return PostprocessResult {
            assignment: a,
            removed_groups: 0,
        };
    }

    let n = inst.num_groups();
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let g = inst.group(i);
            (crate::subproblem::group_dual_value(&g, lambda, a.group(i)), i)
        })
        .collect();
    order.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut removed = 0;
    let mut cursor = 0;
    let mut group_usage = vec![0.0; inst.num_resources()];
    loop {
        // cheap subtractive pass
        while !a.globally_feasible(inst.budgets()) && cursor < order.len() {
            let i = order[cursor].1;
            cursor += 1;
            if a.group(i).iter().any(|&s| s) {
                group_usage.iter_mut().for_each(|u| *u = 0.0);
                inst.group(i).accumulate_usage(a.group(i), &mut group_usage);
                for (r, &u) in a.usage.iter_mut().zip(&group_usage) {
                    *r -= u;
                }
                a.group_mut(i).fill(false);
                removed += 1;
            }
        }
        // subtraction drifts; settle on a fresh sum before declaring victory
        a.recompute_usage(inst);
        if a.globally_feasible(inst.budgets()) || cursor >= order.len() {
            break;
        }
    }
    PostprocessResult {
        assignment: a,
        removed_groups: removed,
    }
}
