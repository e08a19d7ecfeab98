//! Core algorithms for solving generalized knapsack problems at scale.
//!
//! The problem: allocate up to `M` items to each of `N` groups, maximizing
//! total profit subject to `K` global resource budgets and a shared set of
//! per-group cardinality constraints. Decisions are binary. The solvers relax
//! the global constraints with Lagrangian multipliers, which decomposes the
//! problem into one small integer subproblem per group; the multipliers are
//! then driven to a good dual point either by projected subgradient steps
//! ([`solver::dd_solve`]) or by synchronous coordinate descent over candidate
//! breakpoints ([`solver::scd_solve`]).
//!
//! This crate is `no_std` (with `alloc`) and contains no IO or threading.
//! Parallel execution is abstracted behind [`exec::Executor`]; a thread-pool
//! implementation and all file formats live in the companion `kps` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod candidates;
pub mod exec;
pub mod gen;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod subproblem;

pub use exec::{Executor, Sequential};
pub use model::{
    Assignment, CostData, CostView, GroupBlock, Instance, LocalConstraint, LocalConstraintSet,
};
pub use solver::{DdConfig, Multipliers, ScdConfig, SolveError, SolveReport};
