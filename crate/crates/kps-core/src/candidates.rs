//! Candidate multiplier values for synchronous coordinate descent.
//!
//! For a fixed group and coordinate `k`, each item's adjusted profit is a
//! line `z_j(v) = p'_j - v * b[j][k]` in the candidate value `v`, where `p'_j`
//! folds in the cost of every other coordinate at its current multiplier.
//! The greedy selection can only change where a line crosses zero or two
//! lines cross each other, so those points are the complete candidate set.
//!
//! The map step walks the candidates in decreasing order and emits
//! `(v1, v2)` pairs: lowering the coordinate past `v1` unlocks `v2` extra
//! usage of resource `k`. Usage is sampled on the open interval *below* each
//! candidate (at interval midpoints; at 0 for the last), so a jump is
//! attributed to the exact breakpoint where it happens. Sampling at the
//! breakpoints themselves would be fragile: recomputed adjusted profits tie
//! there only up to rounding, and the selection would depend on float noise.
//!
//! When costs are one-to-one (`M == K`, diagonal) and the only local
//! constraint caps the number of chosen items at `Q`, each item has at most
//! one candidate and the whole map runs in `O(K)` via selection instead of
//! sorting.

use alloc::vec::Vec;

use crate::model::{CostView, GroupBlock, LocalConstraintSet};
use crate::subproblem::{insertion_sort_by_value_desc, ConstraintPass};

/// Absolute tolerance under which two candidate values are considered the
/// same root and deduplicated.
pub const CANDIDATE_DEDUP_TOL: f64 = 1e-12;

/// One map emission: lowering coordinate `resource` below `threshold` adds
/// `usage_delta` to that resource's predicted consumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEmission {
    /// Global constraint index `k`, 0-based.
    pub resource: usize,
    /// Candidate multiplier value (`v1`), non-negative.
    pub threshold: f64,
    /// Incremental resource usage (`v2`), strictly positive.
    pub usage_delta: f64,
}

/// Collects the non-negative finite zero crossings and pairwise
/// intersections of the lines `z_j(v) = intercepts[j] - v * slopes[j]` into
/// `out`. Parallel lines contribute no pairwise point.
fn line_candidates(intercepts: &[f64], slopes: &[f64], out: &mut Vec<f64>) {
    let m = intercepts.len();
    for j in 0..m {
        if slopes[j] != 0.0 {
            let root = intercepts[j] / slopes[j];
            if root >= 0.0 && root.is_finite() {
                out.push(root);
            }
        }
        for j2 in j + 1..m {
            if slopes[j] != slopes[j2] {
                let cross = (intercepts[j] - intercepts[j2]) / (slopes[j] - slopes[j2]);
                if cross >= 0.0 && cross.is_finite() {
                    out.push(cross);
                }
            }
        }
    }
}

fn dedup_sorted(values: &mut Vec<f64>) {
    let mut kept = 0;
    for i in 0..values.len() {
        if kept == 0 || (values[i] - values[kept - 1]).abs() > CANDIDATE_DEDUP_TOL {
            values[kept] = values[i];
            kept += 1;
        }
    }
    values.truncate(kept);
}

/// Folds the other coordinates' priced costs into per-item intercepts and
/// extracts coordinate `k`'s slopes.
fn fold_lines(
    group: &GroupBlock<'_>,
    lambda: &[f64],
    k: usize,
    intercepts: &mut Vec<f64>,
    slopes: &mut Vec<f64>,
) {
    let m = group.num_items();
    intercepts.clear();
    slopes.clear();
    match group.costs {
        CostView::Dense { rows, num_resources } => {
            for j in 0..m {
                let row = &rows[j * num_resources..(j + 1) * num_resources];
                let mut priced = 0.0;
                for (k2, (&l, &b)) in lambda.iter().zip(row).enumerate() {
                    if k2 != k {
                        priced += l * b;
                    }
                }
                intercepts.push(group.profits[j] - priced);
                slopes.push(row[k]);
            }
        }
        CostView::Diag(diag) => {
            for j in 0..m {
                if j == k {
                    intercepts.push(group.profits[j]);
                    slopes.push(diag[j]);
                } else {
                    intercepts.push(group.profits[j] - lambda[j] * diag[j]);
                    slopes.push(0.0);
                }
            }
        }
    }
}

/// All candidate values for coordinate `k` of one group: zero crossings and
/// pairwise intersections of the adjusted-profit lines, deduplicated within
/// [`CANDIDATE_DEDUP_TOL`] and sorted ascending. Negative roots are
/// discarded.
pub fn intersection_candidates(group: &GroupBlock<'_>, lambda: &[f64], k: usize) -> Vec<f64> {
    let mut intercepts = Vec::new();
    let mut slopes = Vec::new();
    fold_lines(group, lambda, k, &mut intercepts, &mut slopes);
    let mut out = Vec::new();
    line_candidates(&intercepts, &slopes, &mut out);
    out.sort_unstable_by(f64::total_cmp);
    dedup_sorted(&mut out);
    out
}

/// Scratch buffers for repeated candidate maps over same-sized groups.
#[derive(Debug, Default)]
pub(crate) struct CandidateScratch {
    intercepts: Vec<f64>,
    slopes: Vec<f64>,
    cands: Vec<f64>,
    z: Vec<f64>,
    x: Vec<bool>,
    order: Vec<usize>,
    clipped: Vec<f64>,
    select: Vec<f64>,
    pass: ConstraintPass,
}

impl CandidateScratch {
    /// General map for one coordinate. Candidates are visited in decreasing
    /// order; usage is evaluated just below each candidate (midpoint of the
    /// gap to the next one, exactly at 0 for the last) and an emission is
    /// produced whenever usage rises above the running maximum.
    pub(crate) fn map_general_for_resource(
        &mut self,
        group: &GroupBlock<'_>,
        lambda: &[f64],
        k: usize,
        locals: &LocalConstraintSet,
        out: &mut Vec<CandidateEmission>,
    ) {
        let m = group.num_items();
        fold_lines(group, lambda, k, &mut self.intercepts, &mut self.slopes);

        self.cands.clear();
        line_candidates(&self.intercepts, &self.slopes, &mut self.cands);
        self.cands.push(0.0);
        self.cands.sort_unstable_by(|a, b| b.total_cmp(a));
        // descending dedup
        let mut kept = 0;
        for i in 0..self.cands.len() {
            if kept == 0 || (self.cands[kept - 1] - self.cands[i]).abs() > CANDIDATE_DEDUP_TOL {
                self.cands[kept] = self.cands[i];
                kept += 1;
            }
        }
        self.cands.truncate(kept);

        self.z.resize(m, 0.0);
        self.x.resize(m, false);
        // adjacent samples differ in one or two breakpoints, so the sort
        // order carries over nearly intact; insertion sort keeps the sweep
        // close to linear per sample
        self.order.clear();
        self.order.extend(0..m);
        let mut previous = 0.0;
        for idx in 0..self.cands.len() {
            let candidate = self.cands[idx];
            let sample = if idx + 1 < self.cands.len() {
                0.5 * (candidate + self.cands[idx + 1])
            } else {
                candidate
            };
            let mut any = false;
            for j in 0..m {
                let z_j = self.intercepts[j] - sample * self.slopes[j];
                self.z[j] = z_j;
                self.x[j] = z_j > 0.0;
                any |= self.x[j];
            }
            let mut current = 0.0;
            if any {
                if !locals.is_empty() {
                    insertion_sort_by_value_desc(&self.z, &mut self.order);
                    self.pass.prune(&self.order, locals, &mut self.x);
                }
                for j in 0..m {
                    if self.x[j] {
                        current += self.slopes[j];
                    }
                }
            }
            if current > previous {
                out.push(CandidateEmission {
                    resource: k,
                    threshold: candidate,
                    usage_delta: current - previous,
                });
                previous = current;
            }
        }
    }

    /// General map over every coordinate of one group.
    pub(crate) fn map_group_general(
        &mut self,
        group: &GroupBlock<'_>,
        lambda: &[f64],
        locals: &LocalConstraintSet,
        out: &mut Vec<CandidateEmission>,
    ) {
        for k in 0..lambda.len() {
            self.map_general_for_resource(group, lambda, k, locals, out);
        }
    }

    /// Linear-time map for the sparse one-to-one case with a single local
    /// cap of `q` items. Each item `k` has at most one candidate: the value
    /// that moves its adjusted profit across the top-`q` boundary `pbar`.
    /// Items with zero cost but profit above the boundary cannot be priced
    /// out; they are skipped and counted in `zero_cost_skips`.
    pub(crate) fn map_sparse(
        &mut self,
        group: &GroupBlock<'_>,
        lambda: &[f64],
        q: u32,
        out: &mut Vec<CandidateEmission>,
        zero_cost_skips: &mut u64,
    ) {
        let diag = match group.costs {
            CostView::Diag(d) => d,
            CostView::Dense { .. } => panic!("sparse candidate map requires diagonal costs"),
        };
        let m = group.num_items();
        self.clipped.clear();
        for j in 0..m {
            let adjusted = group.profits[j] - lambda[j] * diag[j];
            self.clipped.push(adjusted.max(0.0));
        }
        let q = q as usize;
        let qth = quick_select_with(&self.clipped, q, &mut self.select);
        let q1th = quick_select_with(&self.clipped, q + 1, &mut self.select);
        for j in 0..m {
            let pbar = if self.clipped[j] >= qth { q1th } else { qth };
            if group.profits[j] > pbar {
                if diag[j] > 0.0 {
                    out.push(CandidateEmission {
                        resource: j,
                        threshold: (group.profits[j] - pbar) / diag[j],
                        usage_delta: diag[j],
                    });
                } else {
                    *zero_cost_skips += 1;
                }
            }
        }
    }
}

/// General candidate map for one group and coordinate.
pub fn scd_map_general(
    group: &GroupBlock<'_>,
    lambda: &[f64],
    k: usize,
    locals: &LocalConstraintSet,
) -> Vec<CandidateEmission> {
    let mut out = Vec::new();
    CandidateScratch::default().map_general_for_resource(group, lambda, k, locals, &mut out);
    out
}

/// Linear-time candidate map for the sparse one-to-one case (`M == K`,
/// diagonal costs, one local constraint selecting at most `q` items).
/// Returns the emissions and the count of zero-cost items that could not be
/// priced out.
pub fn scd_map_sparse(
    group: &GroupBlock<'_>,
    lambda: &[f64],
    q: u32,
) -> (Vec<CandidateEmission>, u64) {
    let mut out = Vec::new();
    let mut skips = 0;
    CandidateScratch::default().map_sparse(group, lambda, q, &mut out, &mut skips);
    (out, skips)
}

/// The `n`-th largest element of `values` (1-based, duplicates counted).
/// Returns 0 when `n` exceeds the length, so a missing "(Q+1)-th" profit
/// behaves like a zero-profit item. Expected `O(len)` via introselect.
pub fn quick_select(values: &[f64], n: usize) -> f64 {
    let mut scratch = Vec::new();
    quick_select_with(values, n, &mut scratch)
}

fn quick_select_with(values: &[f64], n: usize, scratch: &mut Vec<f64>) -> f64 {
    debug_assert!(n >= 1, "selection rank is 1-based");
    if n > values.len() {
        return 0.0;
    }
    scratch.clear();
    scratch.extend_from_slice(values);
    let (_, nth, _) = scratch.select_nth_unstable_by(n - 1, |a, b| b.total_cmp(a));
    *nth
}
