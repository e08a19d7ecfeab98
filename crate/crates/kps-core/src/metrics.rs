//! Solution quality metrics and the tiny-instance brute-force oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::exec::Executor;
use crate::model::{Assignment, Instance};
use crate::solver::{dual_value, max_violation_ratio};
use crate::subproblem::OracleTooLarge;

/// Quality summary of an assignment against an upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub primal_value: f64,
    /// Lagrangian dual bound used as the upper bound for the ratio.
    pub dual_bound: f64,
    /// `dual_bound - primal_value`; non-negative for feasible assignments.
    pub duality_gap: f64,
    /// `primal / dual_bound`, clipped into a sensible range when the bound
    /// is degenerate (zero bound with zero primal counts as 1).
    pub optimality_ratio: f64,
    /// Clipped per-resource violation `(usage - budget) / budget`.
    pub violation_ratios: Vec<f64>,
    pub max_violation_ratio: f64,
}

/// Computes all metrics, recomputing usage and primal value from the raw
/// instance and assignment rather than trusting cached fields.
pub fn evaluate<E: Executor>(
    inst: &Instance,
    assignment: &Assignment,
    lambda: &[f64],
    exec: &E,
) -> Metrics {
    evaluate_with_bound(inst, assignment, dual_value(inst, lambda, exec))
}

/// Same as [`evaluate`] but against an externally supplied upper bound
/// (for example the tightest dual value seen along a solve trace).
pub fn evaluate_with_bound(inst: &Instance, assignment: &Assignment, bound: f64) -> Metrics {
    let mut fresh = assignment.clone();
    fresh.recompute_usage(inst);
    let primal = fresh.primal_value(inst);
    let violation_ratios: Vec<f64> = fresh
        .usage
        .iter()
        .zip(inst.budgets())
        .map(|(&r, &b)| ((r - b) / b).max(0.0))
        .collect();
    let optimality_ratio = if bound > 0.0 {
        primal / bound
    } else if primal == 0.0 {
        1.0
    } else {
        0.0
    };
    Metrics {
        primal_value: primal,
        dual_bound: bound,
        duality_gap: bound - primal,
        optimality_ratio,
        max_violation_ratio: max_violation_ratio(&fresh.usage, inst.budgets()),
        violation_ratios,
    }
}

/// Decision-variable limit for [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Exact optimum by exhaustive search over all feasible assignments.
/// Requires `N * M <= 24`. Groups are explored in order with monotone
/// usage-based pruning, so the search is exact despite the cutoffs.
pub fn brute_force_optimum(inst: &Instance) -> Result<(f64, Assignment), OracleTooLarge> {
    let n = inst.num_groups();
    let m = inst.num_items();
    let k = inst.num_resources();
    if n * m > BRUTE_FORCE_LIMIT {
        return Err(OracleTooLarge {
            num_items: n * m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    // locally feasible selection patterns, shared by every group
    let locals = inst.locals();
    let mut patterns: Vec<Vec<bool>> = Vec::new();
    for mask in 0..(1u32 << m) {
        let selected: Vec<bool> = (0..m).map(|j| mask & (1 << j) != 0).collect();
        if locals.is_feasible(&selected) {
            patterns.push(selected);
        }
    }

    struct Search<'a> {
        inst: &'a Instance,
        patterns: &'a [Vec<bool>],
        choice: Vec<usize>,
        best_value: f64,
        best_choice: Vec<usize>,
    }

    impl Search<'_> {
        fn run(&mut self, group: usize, usage: &mut [f64], value: f64) {
            if group == self.inst.num_groups() {
                if value > self.best_value {
                    self.best_value = value;
                    self.best_choice.copy_from_slice(&self.choice);
                }
                return;
            }
            let g = self.inst.group(group);
            'pattern: for (p, selected) in self.patterns.iter().enumerate() {
                let mut added = vec![0.0; usage.len()];
                g.accumulate_usage(selected, &mut added);
                for ((&u, &a), &b) in usage.iter().zip(&added).zip(self.inst.budgets()) {
                    if u + a > b {
                        continue 'pattern;
                    }
                }
                let mut gained = 0.0;
                for (j, &sel) in selected.iter().enumerate() {
                    if sel {
                        gained += g.profits[j];
                    }
                }
                for (u, &a) in usage.iter_mut().zip(&added) {
                    *u += a;
                }
                self.choice[group] = p;
                self.run(group + 1, usage, value + gained);
                for (u, &a) in usage.iter_mut().zip(&added) {
                    *u -= a;
                }
            }
        }
    }

    let mut search = Search {
        inst,
        patterns: &patterns,
        choice: vec![0; n],
        best_value: 0.0,
        best_choice: vec![0; n],
    };
    let mut usage = vec![0.0; k];
    search.run(0, &mut usage, 0.0);

    let mut assignment = Assignment::empty(n, m, k);
    for (i, &p) in search.best_choice.iter().enumerate() {
        assignment.group_mut(i).copy_from_slice(&patterns[p]);
    }
    assignment.recompute_usage(inst);
    Ok((search.best_value, assignment))
}
