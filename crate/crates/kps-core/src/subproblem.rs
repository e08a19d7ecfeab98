//! Per-group integer subproblem: maximize the cost-adjusted profit of the
//! selected items subject to the group's local constraints.
//!
//! With hierarchical constraints the greedy pass over the containment order
//! is exact: start from every item with strictly positive adjusted profit,
//! then for each constraint in topological order keep only its top-`C_l`
//! currently selected items. An exhaustive enumerator over all `2^M`
//! selections serves as the independent test oracle.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{GroupBlock, LocalConstraintSet};

/// Cost-adjusted profits of one group at a given multiplier vector, plus the
/// item order the greedy uses.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedProfits {
    /// `ptilde[j] = p[j] - sum_k lambda[k] * b[j][k]`.
    pub values: Vec<f64>,
    /// Item indices (0-based) sorted by adjusted profit, non-increasing;
    /// ties broken by ascending item index.
    pub order: Vec<usize>,
}

/// Computes the adjusted profit vector and its sorted item order.
pub fn adjusted_profits(group: &GroupBlock<'_>, lambda: &[f64]) -> AdjustedProfits {
    let mut values = vec![0.0; group.num_items()];
    adjusted_profits_into(group, lambda, &mut values);
    let mut order: Vec<usize> = (0..values.len()).collect();
    sort_by_value_desc(&values, &mut order);
    AdjustedProfits { values, order }
}

/// Fills `out[j] = p[j] - sum_k lambda[k] * b[j][k]`, accumulating the cost
/// term in resource order.
pub(crate) fn adjusted_profits_into(group: &GroupBlock<'_>, lambda: &[f64], out: &mut [f64]) {
    match group.costs {
        crate::model::CostView::Dense { rows, num_resources } => {
            for (j, out_j) in out.iter_mut().enumerate() {
                let row = &rows[j * num_resources..(j + 1) * num_resources];
                let mut priced = 0.0;
                for (&l, &b) in lambda.iter().zip(row) {
                    priced += l * b;
                }
                *out_j = group.profits[j] - priced;
            }
        }
        crate::model::CostView::Diag(diag) => {
            for (j, out_j) in out.iter_mut().enumerate() {
                *out_j = group.profits[j] - lambda[j] * diag[j];
            }
        }
    }
}

#[inline]
pub(crate) fn sort_by_value_desc(values: &[f64], order: &mut [usize]) {
    order.sort_unstable_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
}

/// Insertion sort into the same (value desc, index asc) order. The order is
/// total, so the result is independent of the starting permutation; on the
/// nearly-sorted permutations the candidate sweep produces this runs in
/// almost linear time.
#[inline]
pub(crate) fn insertion_sort_by_value_desc(values: &[f64], order: &mut [usize]) {
    for i in 1..order.len() {
        let item = order[i];
        let key = values[item];
        let mut j = i;
        while j > 0 {
            let ahead = order[j - 1];
            let before = values[ahead] < key || (values[ahead] == key && ahead > item);
            if !before {
                break;
            }
            order[j] = ahead;
            j -= 1;
        }
        order[j] = item;
    }
}

/// The constraint-pruning pass of the greedy: given the item order, evict
/// all but the top-`C_l` currently selected items of every constraint in
/// topological order.
#[derive(Debug, Default)]
pub(crate) struct ConstraintPass {
    rank: Vec<u32>,
    picked: Vec<(u32, u32)>,
}

impl ConstraintPass {
    /// `order` must be sorted by (adjusted profit desc, index asc); `x`
    /// holds the initial selection and is pruned in place.
    pub(crate) fn prune(&mut self, order: &[usize], locals: &LocalConstraintSet, x: &mut [bool]) {
        self.rank.resize(order.len(), 0);
        for (pos, &j) in order.iter().enumerate() {
            self.rank[j] = pos as u32;
        }
        for &l in locals.topo_order() {
            let c = &locals.constraints()[l];
            let cap = c.capacity as usize;
            self.picked.clear();
            for &item in &c.items {
                let j = item as usize - 1;
                if x[j] {
                    self.picked.push((self.rank[j], j as u32));
                }
            }
            if self.picked.len() > cap {
                self.picked.sort_unstable();
                for &(_, j) in &self.picked[cap..] {
                    x[j as usize] = false;
                }
            }
        }
    }
}

/// Reusable buffers for repeated greedy solves of same-sized groups.
#[derive(Debug, Default)]
pub(crate) struct GreedyScratch {
    order: Vec<usize>,
    pass: ConstraintPass,
}

impl GreedyScratch {
    /// Greedy selection for hierarchical local constraints, writing the
    /// decision vector into `x`.
    ///
    /// Items with `values[j] > 0` (strictly) start selected; each constraint
    /// in topological order then evicts all but its top-`C_l` selected items,
    /// ranked by adjusted profit with ties to the smaller index.
    pub(crate) fn select(&mut self, values: &[f64], locals: &LocalConstraintSet, x: &mut [bool]) {
        let m = values.len();
        let mut any = false;
        for (x_j, &v) in x.iter_mut().zip(values) {
            *x_j = v > 0.0;
            any |= *x_j;
        }
        if locals.is_empty() || !any {
            return;
        }
        self.order.clear();
        self.order.extend(0..m);
        sort_by_value_desc(values, &mut self.order);
        self.pass.prune(&self.order, locals, x);
    }
}

/// Greedy selection from precomputed adjusted profits.
pub fn greedy_select(values: &[f64], locals: &LocalConstraintSet) -> Vec<bool> {
    let mut x = vec![false; values.len()];
    GreedyScratch::default().select(values, locals, &mut x);
    x
}

/// Solves one group's subproblem with the greedy pass (exact for
/// hierarchical local constraints).
pub fn solve_group_greedy(
    group: &GroupBlock<'_>,
    lambda: &[f64],
    locals: &LocalConstraintSet,
) -> Vec<bool> {
    let adjusted = adjusted_profits(group, lambda);
    greedy_select(&adjusted.values, locals)
}

/// The exhaustive oracle refused to enumerate a group this large.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleTooLarge {
    pub num_items: usize,
    pub limit: usize,
}

impl fmt::Display for OracleTooLarge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exhaustive oracle limited to {} items per group, got {}",
            self.limit, self.num_items
        )
    }
}

pub const EXHAUSTIVE_ITEM_LIMIT: usize = 20;

/// Enumerates all `2^M` selections and returns a maximizer of the adjusted
/// profit among those satisfying the local constraints, ties broken by the
/// lexicographically smallest decision vector `(x_1, ..., x_M)`.
pub fn solve_group_exhaustive(
    group: &GroupBlock<'_>,
    lambda: &[f64],
    locals: &LocalConstraintSet,
) -> Result<Vec<bool>, OracleTooLarge> {
    let adjusted = adjusted_profits(group, lambda);
    exhaustive_select(&adjusted.values, locals)
}

/// Exhaustive maximizer over precomputed adjusted profits.
pub fn exhaustive_select(
    values: &[f64],
    locals: &LocalConstraintSet,
) -> Result<Vec<bool>, OracleTooLarge> {
    let m = values.len();
    if m > EXHAUSTIVE_ITEM_LIMIT {
        return Err(OracleTooLarge {
            num_items: m,
            limit: EXHAUSTIVE_ITEM_LIMIT,
        });
    }

    // Bit M-j of the mask holds x_j, so increasing mask order enumerates
    // decision vectors in lexicographic order and the first strict maximum
    // is the lexicographically smallest one.
    let item_bit = |j: usize| 1u32 << (m - 1 - j);
    let constraint_masks: Vec<(u32, u32)> = locals
        .constraints()
        .iter()
        .map(|c| {
            let mask = c
                .items
                .iter()
                .fold(0u32, |acc, &item| acc | item_bit(item as usize - 1));
            (mask, c.capacity)
        })
        .collect();

    let mut best_mask = 0u32;
    let mut best_value = 0.0;
    for mask in 0..(1u32 << m) {
        if constraint_masks
            .iter()
            .any(|&(cm, cap)| (mask & cm).count_ones() > cap)
        {
            continue;
        }
        let mut value = 0.0;
        for (j, &v) in values.iter().enumerate() {
            if mask & item_bit(j) != 0 {
                value += v;
            }
        }
        if value > best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    Ok((0..m).map(|j| best_mask & item_bit(j) != 0).collect())
}

/// The group's contribution to the dual objective at `lambda`:
/// `sum_j p[j] x[j] - sum_k lambda[k] * sum_j b[j][k] x[j]`.
pub fn group_dual_value(group: &GroupBlock<'_>, lambda: &[f64], selected: &[bool]) -> f64 {
    let mut profit = 0.0;
    for (j, &sel) in selected.iter().enumerate() {
        if sel {
            profit += group.profits[j];
        }
    }
    let mut priced = 0.0;
    match group.costs {
        crate::model::CostView::Dense { .. } => {
            for (k, &l) in lambda.iter().enumerate() {
                priced += l * group.usage_for(selected, k);
            }
        }
        crate::model::CostView::Diag(diag) => {
            for (j, &sel) in selected.iter().enumerate() {
                if sel {
                    priced += lambda[j] * diag[j];
                }
            }
        }
    }
    profit - priced
}

/// Objective value of a selection under precomputed adjusted profits,
/// summed in item order.
pub fn selection_value(values: &[f64], selected: &[bool]) -> f64 {
    values
        .iter()
        .zip(selected)
        .filter(|(_, &sel)| sel)
        .map(|(&v, _)| v)
        .sum()
}
