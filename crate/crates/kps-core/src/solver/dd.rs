//! Dual descent: projected subgradient iteration on the multipliers.

use crate::exec::Executor;
use crate::model::{Assignment, Instance};

use super::{
    convergence_check, evaluate_lambda, initial_lambda, perturbation_slack, DdConfig, Multipliers,
    SolveError, SolveReport,
};

/// Runs dual descent to convergence or `max_iters` updates.
///
/// Each iteration solves every group at the current multipliers, aggregates
/// usage `R_k` in group order, and steps
/// `lambda_k <- max(0, lambda_k + alpha * (R_k - B_k))`. The returned
/// assignment is the subproblem solution at the final multipliers; it can
/// violate global budgets and is usually passed through
/// [`postprocess`](super::postprocess).
pub fn dd_solve<E: Executor>(
    inst: &Instance,
    cfg: &DdConfig,
    exec: &E,
) -> Result<(Multipliers, Assignment, SolveReport), SolveError> {
    let mut lambda = initial_lambda(&cfg.initial_lambda, inst.num_resources());
    let mut report = SolveReport::default();
    let mut t = 0u32;
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
        for (l, (&r, &b)) in lambda.iter_mut().zip(phase.usage.iter().zip(inst.budgets())) {
            *l = (*l + cfg.alpha * (r - b)).max(0.0);
        }
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostData, LocalConstraintSet};
    use crate::Sequential;

    #[test]
    fn update_rule_examples() {
        // lambda 0.5, alpha 0.1, R 10, B 12 -> 0.3
        let step = |l: f64, alpha: f64, r: f64, b: f64| (l + alpha * (r - b)).max(0.0);
        assert_eq!(step(0.5, 0.1, 10.0, 12.0), 0.3);
        // projection at zero
        assert_eq!(step(0.1, 1.0, 5.0, 50.0), 0.0);
        // zero gradient leaves lambda unchanged
        assert_eq!(step(0.7, 0.1, 12.0, 12.0), 0.7);
    }

    #[test]
    fn zero_gradient_converges_after_one_check() {
        // single group, p=2, b=1, budget exactly matches usage at lambda=1
        let inst = Instance::new(
            1,
            1,
            vec![1.0],
            LocalConstraintSet::unconstrained(),
            vec![2.0],
            CostData::Dense(vec![1.0]),
        )
        .unwrap();
        let (m, a, report) = dd_solve(&inst, &DdConfig::default(), &Sequential).unwrap();
        // item selected (adjusted profit 1 > 0), usage 1 == budget
        assert!(report.converged);
        assert_eq!(report.update_count(), 1);
        assert_eq!(m.values, vec![1.0]);
        assert_eq!(a.usage, vec![1.0]);
        assert_eq!(a.group(0), &[true]);
    }

    #[test]
    fn runs_out_of_iterations_without_convergence() {
        // oscillating instance: budget forces lambda up, then selection
        // drops and pulls it back down; a huge alpha keeps it bouncing
        let inst = Instance::new(
            1,
            1,
            vec![0.5],
            LocalConstraintSet::unconstrained(),
            vec![1.0],
            CostData::Dense(vec![1.0]),
        )
        .unwrap();
        let cfg = DdConfig {
            alpha: 10.0,
            max_iters: 7,
            ..DdConfig::default()
        };
        let (_, _, report) = dd_solve(&inst, &cfg, &Sequential).unwrap();
        assert!(!report.converged);
        assert_eq!(report.update_count(), 7);
        assert_eq!(report.iterations.len(), 8);
    }

    #[test]
    fn weak_duality_along_the_trace() {
        let inst = Instance::new(
            3,
            2,
            vec![1.0, 1.0],
            LocalConstraintSet::single_cap(2, 1),
            vec![0.9, 0.4, 0.8, 0.3, 0.7, 0.2],
            CostData::Diag(vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
        )
        .unwrap();
        let cfg = DdConfig {
            alpha: 0.05,
            max_iters: 50,
            ..DdConfig::default()
        };
        let (_, assignment, report) = dd_solve(&inst, &cfg, &Sequential).unwrap();
        let out = super::super::postprocess(&inst, &assignment, &report.final_record().lambda);
        let feasible_primal = out.assignment.primal_value(&inst);
        for rec in &report.iterations {
            assert!(rec.dual_value >= feasible_primal - 1e-9 * feasible_primal.abs());
        }
    }
}
