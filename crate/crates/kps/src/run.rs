//! Solve orchestration shared by the CLI and the acceptance suite:
//! warm-start defaults, the solve itself, post-processing and metrics.

use kps_core::metrics::{evaluate_with_bound, Metrics};
use kps_core::model::{Assignment, Instance};
use kps_core::solver::{
    dd_solve, postprocess, presolve, scd_solve, Bucketing, DdConfig, Multipliers, Presolve,
    ScdConfig, SolveError, SolveReport,
};
use kps_core::Executor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Dd { alpha: f64 },
    Scd,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Dd { .. } => "dd",
            Algorithm::Scd => "scd",
        }
    }
}

/// Warm-start policy. `Auto` samples 10,000 groups for SCD on instances
/// with more than 100,000 groups and is off otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PresolvePolicy {
    #[default]
    Auto,
    Off,
    Sample(usize),
}

pub const AUTO_PRESOLVE_THRESHOLD: usize = 100_000;
pub const AUTO_PRESOLVE_SAMPLE: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub algorithm: Algorithm,
    pub max_iters: Option<u32>,
    pub tol: f64,
    pub bucket_delta: Option<f64>,
    pub presolve: PresolvePolicy,
    pub presolve_seed: u64,
    pub postprocess: bool,
}

impl RunOptions {
    pub fn new(algorithm: Algorithm) -> Self {
        RunOptions {
            algorithm,
            max_iters: None,
            tol: 1e-6,
            bucket_delta: None,
            presolve: PresolvePolicy::Auto,
            presolve_seed: 0,
            postprocess: true,
        }
    }

    fn presolve_setting(&self, inst: &Instance) -> Presolve {
        let sample = match self.presolve {
            PresolvePolicy::Off => return Presolve::Off,
            PresolvePolicy::Sample(n) => Some(n),
            PresolvePolicy::Auto => {
                if matches!(self.algorithm, Algorithm::Scd)
                    && inst.num_groups() > AUTO_PRESOLVE_THRESHOLD
                {
                    Some(AUTO_PRESOLVE_SAMPLE)
                } else {
                    None
                }
            }
        };
        match sample {
            Some(size) => Presolve::Sample {
                size,
                seed: self.presolve_seed,
            },
            None => Presolve::Off,
        }
    }
}

pub struct RunOutcome {
    pub multipliers: Multipliers,
    /// Final assignment, post-processed when enabled.
    pub assignment: Assignment,
    pub report: SolveReport,
    pub metrics: Metrics,
    pub feasible: bool,
}

/// Runs the configured algorithm, applies post-processing, and evaluates
/// the result against the tightest dual bound seen along the trace.
pub fn solve_instance<E: Executor>(
    inst: &Instance,
    opts: &RunOptions,
    exec: &E,
) -> Result<RunOutcome, SolveError> {
    let (multipliers, raw_assignment, mut report) = match opts.algorithm {
        Algorithm::Dd { alpha } => {
            let mut cfg = DdConfig {
                alpha,
                tol: opts.tol,
                ..DdConfig::default()
            };
            if let Some(t) = opts.max_iters {
                cfg.max_iters = t;
            }
            // DD has no presolve of its own; an explicit sample request
            // seeds its starting multipliers
            if let PresolvePolicy::Sample(size) = opts.presolve {
                let warm = presolve(inst, size, opts.presolve_seed, exec)?;
                cfg.initial_lambda = Some(warm.values);
            }
            dd_solve(inst, &cfg, exec)?
        }
        Algorithm::Scd => {
            let mut cfg = ScdConfig {
                tol: opts.tol,
                presolve: opts.presolve_setting(inst),
                ..ScdConfig::default()
            };
            if let Some(t) = opts.max_iters {
                cfg.max_iters = t;
            }
            if let Some(delta) = opts.bucket_delta {
                cfg.bucketing = Bucketing::Delta(delta);
            }
            scd_solve(inst, &cfg, exec)?
        }
    };

    let assignment = if opts.postprocess {
        let out = postprocess(inst, &raw_assignment, &multipliers.values);
        report.removed_groups = out.removed_groups;
        out.assignment
    } else {
        raw_assignment
    };

    let metrics = evaluate_with_bound(inst, &assignment, report.min_dual());
    let feasible =
        assignment.globally_feasible(inst.budgets()) && assignment.locally_feasible(inst.locals());
    Ok(RunOutcome {
        multipliers,
        assignment,
        report,
        metrics,
        feasible,
    })
}
