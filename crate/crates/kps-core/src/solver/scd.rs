//! Synchronous coordinate descent over candidate breakpoints.

use alloc::vec;
use alloc::vec::Vec;

use crate::candidates::{CandidateEmission, CandidateScratch};
use crate::exec::Executor;
use crate::model::{Assignment, Instance};

use super::reduce::{exact_reduce_outcome, ReduceOutcome};
use super::{
    convergence_check, evaluate_lambda, initial_lambda, perturbation_slack, presolve, Bucketing,
    Multipliers, Presolve, ScdConfig, SolveError, SolveReport, GENERAL_PATH_ITEM_LIMIT,
};

/// Smallest step fraction the oscillation control may fall back to.
const MIN_STEP_FRACTION: f64 = 1.0 / 64.0;

/// Runs synchronous coordinate descent to convergence or `max_iters`
/// updates.
///
/// Each iteration maps every group to its candidate emissions (the
/// linear-time sparse map when costs are one-to-one under a single item
/// cap, the general line-intersection map otherwise), merges them per
/// resource in group order, and moves every coordinate simultaneously
/// toward the reduce threshold computed against `lambda^t`.
///
/// The dynamics are piecewise constant in the multipliers, so the iteration
/// typically lands on an exact fixed point after finitely many updates; at
/// that point the predicted usage equals the realized usage and respects
/// every budget (with exact reduce).
///
/// Moving every coordinate the full distance to its solo threshold is only
/// sound when the coordinates are weakly coupled (as in the one-to-one
/// sparse case). Dense instances with many overlapping resources can make
/// the simultaneous full step overshoot collectively and settle into a
/// two-cycle; the loop watches the dual value, halves the step fraction
/// whenever the dual rises, and restores it geometrically while the dual
/// keeps falling. Full steps land exactly on emitted thresholds; damped
/// steps give up that property in exchange for convergence.
pub fn scd_solve<E: Executor>(
    inst: &Instance,
    cfg: &ScdConfig,
    exec: &E,
) -> Result<(Multipliers, Assignment, SolveReport), SolveError> {
    let num_resources = inst.num_resources();
    let sparse_cap = if inst.is_diag() {
        inst.locals().as_single_full_cap(inst.num_items())
    } else {
        None
    };
    if sparse_cap.is_none() && inst.num_items() > GENERAL_PATH_ITEM_LIMIT {
        return Err(SolveError::GroupTooLarge {
            num_items: inst.num_items(),
            limit: GENERAL_PATH_ITEM_LIMIT,
        });
    }

    let mut lambda = match cfg.presolve {
        Presolve::Off => initial_lambda(&cfg.initial_lambda, num_resources),
        Presolve::Sample { size, seed } => presolve(inst, size, seed, exec)?.values,
    };

    let mut report = SolveReport::default();
    let mut t = 0u32;
    let mut step_fraction: f64 = 1.0;
    loop {
        let phase = evaluate_lambda(inst, &lambda, exec);
        report
            .iterations
            .push(phase.record(t, &lambda, inst.budgets()));
        if !phase.dual.is_finite() {
            return Err(SolveError::Divergence { iteration: t });
        }
        let converged = convergence_check(&report.iterations, cfg.tol);
        if converged || t >= cfg.max_iters {
            report.converged = converged;
            report.perturbation_slack = perturbation_slack(&phase.usage, inst.budgets(), &lambda);
            let assignment = phase.into_assignment(inst);
            return Ok((
                Multipliers {
                    values: lambda,
                    iteration: t,
                },
                assignment,
                report,
            ));
        }

        let n = report.iterations.len();
        if n >= 2 {
            let previous = report.iterations[n - 2].dual_value;
            let current = report.iterations[n - 1].dual_value;
            if current > previous * (1.0 + 1e-12) {
                step_fraction = (step_fraction * 0.5).max(MIN_STEP_FRACTION);
            } else {
                step_fraction = (step_fraction * 1.5).min(1.0);
            }
        }

        let (mut per_resource, skips) = emission_phase(inst, &lambda, sparse_cap, exec);
        report.zero_cost_skips += skips;
        for (k, emissions) in per_resource.iter_mut().enumerate() {
            // usage is piecewise constant, so the price is applied strictly
            // inside the interval below the reduce threshold: the item
            // entering exactly at the threshold is then realized, matching
            // the predicted prefix (at the breakpoint itself the strict
            // positivity rule would drop it)
            let target = match cfg.bucketing {
                Bucketing::Off => match exact_reduce_outcome(emissions, inst.budgets()[k]) {
                    ReduceOutcome::Zero => 0.0,
                    ReduceOutcome::Threshold { value, next_below } => {
                        0.5 * (value + next_below)
                    }
                    ReduceOutcome::NothingFits { top } => top.next_up(),
                },
                Bucketing::Delta(delta) => {
                    super::bucketed_reduce(emissions, lambda[k], delta, inst.budgets()[k])
                }
            };
            if step_fraction == 1.0 {
                lambda[k] = target;
            } else {
                lambda[k] = (lambda[k] + step_fraction * (target - lambda[k])).max(0.0);
            }
        }
        t += 1;
    }
}

/// Maps every group to candidate emissions and merges them per resource in
/// group order. Returns the per-resource `(v1, v2)` lists and the total
/// zero-cost skip count from the sparse path.
fn emission_phase<E: Executor>(
    inst: &Instance,
    lambda: &[f64],
    sparse_cap: Option<u32>,
    exec: &E,
) -> (Vec<Vec<(f64, f64)>>, u64) {
    let locals = inst.locals();
    let per_group: Vec<(Vec<CandidateEmission>, u64)> = exec.map_groups_with(
        inst.num_groups(),
        CandidateScratch::default,
        move |scratch, i| {
            let g = inst.group(i);
            let mut out = Vec::new();
            let mut skips = 0u64;
            match sparse_cap {
                Some(q) => scratch.map_sparse(&g, lambda, q, &mut out, &mut skips),
                None => scratch.map_group_general(&g, lambda, locals, &mut out),
            }
            (out, skips)
        },
    );

    let mut per_resource: Vec<Vec<(f64, f64)>> = vec![Vec::new(); inst.num_resources()];
    let mut total_skips = 0u64;
    for (emissions, skips) in per_group {
        total_skips += skips;
        for e in emissions {
            per_resource[e.resource].push((e.threshold, e.usage_delta));
        }
    }
    (per_resource, total_skips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostData, LocalConstraintSet};
    use crate::Sequential;

    fn diag_instance(
        budgets: Vec<f64>,
        cap: u32,
        profits: Vec<f64>,
        costs: Vec<f64>,
    ) -> Instance {
        let m = budgets.len();
        let n = profits.len() / m;
        Instance::new(
            n,
            m,
            budgets,
            LocalConstraintSet::single_cap(m, cap),
            profits,
            CostData::Diag(costs),
        )
        .unwrap()
    }

    #[test]
    fn single_coordinate_reaches_fixed_point_in_two_updates() {
        // three groups, one item each; entry thresholds p/b = 0.9, 0.5, 0.25
        let inst = diag_instance(
            vec![2.0],
            1,
            vec![0.9, 0.5, 0.5],
            vec![1.0, 1.0, 2.0],
        );
        let (m, a, report) = scd_solve(&inst, &ScdConfig::default(), &Sequential).unwrap();
        assert!(report.converged);
        assert_eq!(report.update_count(), 2);
        // cumulative predicted usage: 1 at 0.9, 2 at 0.5, 4 at 0.25; the
        // smallest threshold still within budget 2 is 0.5, applied as the
        // midpoint of its equivalence interval (0.25, 0.5)
        assert_eq!(m.values, vec![0.375]);
        // both prefix items are realized, including the one entering
        // exactly at the threshold
        assert_eq!(a.usage, vec![2.0]);
        assert_eq!(a.group(0), &[true]);
        assert_eq!(a.group(1), &[true]);
        assert!(a.globally_feasible(inst.budgets()));
    }

    #[test]
    fn slack_budget_drives_prices_to_zero() {
        let inst = diag_instance(
            vec![100.0, 100.0],
            2,
            vec![0.9, 0.5, 0.8, 0.6],
            vec![1.0, 1.0, 1.0, 1.0],
        );
        let (m, a, report) = scd_solve(&inst, &ScdConfig::default(), &Sequential).unwrap();
        assert!(report.converged);
        assert_eq!(m.values, vec![0.0, 0.0]);
        // every positive-profit item selected
        assert_eq!(a.selected_count(), 4);
        assert_eq!(report.final_record().max_violation_ratio, 0.0);
    }

    #[test]
    fn predicted_usage_respects_budgets_at_fixed_point() {
        let inst = diag_instance(
            vec![2.0, 1.0, 1.5],
            2,
            vec![0.9, 0.5, 0.3, 0.8, 0.6, 0.4, 0.7, 0.5, 0.2],
            vec![1.0, 0.8, 0.6, 0.9, 1.1, 0.7, 1.3, 0.5, 0.9],
        );
        let (m, a, report) = scd_solve(&inst, &ScdConfig::default(), &Sequential).unwrap();
        assert!(report.converged);
        // at the fixed point realized usage is the predicted usage
        for (r, b) in a.usage.iter().zip(inst.budgets()) {
            assert!(r <= b, "usage {r} exceeds budget {b}");
        }
        assert!(m.values.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn general_path_matches_on_dense_instance() {
        // dense costs, nested local constraints: exercises the general map
        let locals = LocalConstraintSet::new(vec![
            crate::model::LocalConstraint::new(vec![1, 2], 1),
            crate::model::LocalConstraint::new(vec![1, 2, 3], 2),
        ]);
        let inst = Instance::new(
            4,
            3,
            vec![2.0, 2.5],
            locals,
            vec![
                0.9, 0.8, 0.3, 0.7, 0.2, 0.6, 0.5, 0.4, 0.1, 0.95, 0.05, 0.55,
            ],
            CostData::Dense(vec![
                0.6, 0.3, 0.2, 0.8, 0.5, 0.1, 0.4, 0.9, 0.3, 0.2, 0.7, 0.6, 0.9, 0.4, 0.1, 0.3,
                0.5, 0.2, 0.8, 0.6, 0.2, 0.9, 0.7, 0.4,
            ]),
        )
        .unwrap();
        let (m, a, report) = scd_solve(&inst, &ScdConfig::default(), &Sequential).unwrap();
        // coupled dense coordinates can settle into a two-cycle instead of
        // a fixed point; the run then stops at the iteration cap
        assert_eq!(report.iterations.len() as u32, report.update_count() + 1);
        assert!(a.locally_feasible(inst.locals()));
        let out = super::super::postprocess(&inst, &a, &m.values);
        assert!(out.assignment.globally_feasible(inst.budgets()));
        assert!(out.assignment.locally_feasible(inst.locals()));
        // weak duality against the post-processed feasible primal
        let primal = out.assignment.primal_value(&inst);
        assert!(report.min_dual() >= primal - 1e-9);
    }

    #[test]
    fn oversized_general_instance_is_rejected() {
        let m = GENERAL_PATH_ITEM_LIMIT + 1;
        let inst = Instance::new(
            1,
            m,
            vec![1.0],
            LocalConstraintSet::unconstrained(),
            vec![0.5; m],
            CostData::Dense(vec![0.1; m]),
        )
        .unwrap();
        let err = scd_solve(&inst, &ScdConfig::default(), &Sequential).unwrap_err();
        assert_eq!(
            err,
            SolveError::GroupTooLarge {
                num_items: m,
                limit: GENERAL_PATH_ITEM_LIMIT
            }
        );
    }

    #[test]
    fn bucketed_run_stays_feasible_after_postprocess() {
        let inst = diag_instance(
            vec![2.0, 1.0],
            1,
            vec![0.9, 0.5, 0.8, 0.6, 0.7, 0.4, 0.3, 0.2],
            vec![1.0, 0.8, 0.9, 1.1, 1.3, 0.5, 0.7, 0.6],
        );
        let cfg = ScdConfig {
            bucketing: Bucketing::Delta(0.05),
            ..ScdConfig::default()
        };
        let (m, a, _) = scd_solve(&inst, &cfg, &Sequential).unwrap();
        let out = super::super::postprocess(&inst, &a, &m.values);
        assert!(out.assignment.globally_feasible(inst.budgets()));
    }
}
