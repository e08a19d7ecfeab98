//! Problem data model: instances, per-group blocks, local constraint
//! hierarchies, assignments, and instance validation.
//!
//! An [`Instance`] holds `N` groups of `M` items each, `K` global budgets and
//! one [`LocalConstraintSet`] shared by every group. Profits and costs are
//! stored flat (group-major); [`GroupBlock`] is a borrowed view of one group,
//! cheap to hand to worker shards.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Owned cost coefficients for all groups.
///
/// `Dense` stores `N * M * K` values in group-major, item-major order.
/// `Diag` is the sparse one-to-one form (`M == K`, `b[i][j][k] = 0` for
/// `j != k`) and stores only the `N * M` diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub enum CostData {
    Dense(Vec<f64>),
    Diag(Vec<f64>),
}

/// Borrowed cost coefficients of a single group.
#[derive(Debug, Clone, Copy)]
pub enum CostView<'a> {
    /// `M * K` row-major slice: entry `j * K + k` is the item-`j` cost on
    /// resource `k`.
    Dense { rows: &'a [f64], num_resources: usize },
    /// `M` diagonal entries; item `j` consumes only resource `j`.
    Diag(&'a [f64]),
}

impl CostView<'_> {
    /// Cost of item `j` (0-based) on resource `k` (0-based).
    #[inline]
    pub fn cost(&self, item: usize, resource: usize) -> f64 {
        match self {
            CostView::Dense { rows, num_resources } => rows[item * num_resources + resource],
            CostView::Diag(diag) => {
                if item == resource {
                    diag[item]
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn is_diag(&self) -> bool {
        matches!(self, CostView::Diag(_))
    }
}

/// One group's slice of the instance: its id, profit vector and cost rows.
#[derive(Debug, Clone, Copy)]
pub struct GroupBlock<'a> {
    /// 1-based group id, matching the instance file format.
    pub group_id: u32,
    /// `M` non-negative profits.
    pub profits: &'a [f64],
    pub costs: CostView<'a>,
}

impl GroupBlock<'_> {
    #[inline]
    pub fn num_items(&self) -> usize {
        self.profits.len()
    }

    /// Accumulates this group's resource usage for `selected` into `out`
    /// (length `K`), summing in item order.
    pub fn accumulate_usage(&self, selected: &[bool], out: &mut [f64]) {
        match self.costs {
            CostView::Dense { rows, num_resources } => {
                for (j, &sel) in selected.iter().enumerate() {
                    if sel {
                        let row = &rows[j * num_resources..(j + 1) * num_resources];
                        for (acc, &c) in out.iter_mut().zip(row) {
                            *acc += c;
                        }
                    }
                }
            }
            CostView::Diag(diag) => {
                for (j, &sel) in selected.iter().enumerate() {
                    if sel {
                        out[j] += diag[j];
                    }
                }
            }
        }
    }

    /// Resource-`k` usage of `selected`, summed in item order.
    pub fn usage_for(&self, selected: &[bool], resource: usize) -> f64 {
        match self.costs {
            CostView::Dense { rows, num_resources } => selected
                .iter()
                .enumerate()
                .filter(|(_, &sel)| sel)
                .map(|(j, _)| rows[j * num_resources + resource])
                .sum(),
            CostView::Diag(diag) => {
                if selected[resource] {
                    diag[resource]
                } else {
                    0.0
                }
            }
        }
    }
}

/// A single local constraint: at most `capacity` of the listed items may be
/// selected in any one group. Item ids are 1-based and kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalConstraint {
    pub items: Vec<u32>,
    pub capacity: u32,
}

impl LocalConstraint {
    pub fn new(mut items: Vec<u32>, capacity: u32) -> Self {
        items.sort_unstable();
        items.dedup();
        LocalConstraint { items, capacity }
    }
}

/// The local constraint template shared by all groups, with a topological
/// order of the containment relation (subsets first).
///
/// The order is computed on construction by sorting constraints by item-set
/// size: in a hierarchical (laminar) family a strict subset is strictly
/// smaller, so size order is a valid topological order. Whether the family
/// actually is hierarchical is checked by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalConstraintSet {
    constraints: Vec<LocalConstraint>,
    topo_order: Vec<usize>,
}

impl LocalConstraintSet {
    pub fn new(constraints: Vec<LocalConstraint>) -> Self {
        let mut topo_order: Vec<usize> = (0..constraints.len()).collect();
        topo_order.sort_by_key(|&l| (constraints[l].items.len(), l));
        LocalConstraintSet {
            constraints,
            topo_order,
        }
    }

    /// A set with no constraints (every selection is locally feasible).
    pub fn unconstrained() -> Self {
        Self::new(Vec::new())
    }

    /// Single cap over all `num_items` items: at most `capacity` selections.
    pub fn single_cap(num_items: usize, capacity: u32) -> Self {
        Self::new(vec![LocalConstraint::new(
            (1..=num_items as u32).collect(),
            capacity,
        )])
    }

    #[inline]
    pub fn constraints(&self) -> &[LocalConstraint] {
        &self.constraints
    }

    /// Constraint indices in topological order, every subset before any of
    /// its supersets.
    #[inline]
    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// True when the set is exactly one constraint covering items
    /// `1..=num_items`; returns its capacity. This is the shape required by
    /// the linear-time sparse candidate map.
    pub fn as_single_full_cap(&self, num_items: usize) -> Option<u32> {
        match self.constraints.as_slice() {
            [c] if c.items.len() == num_items
                && c.items.first() == Some(&1)
                && c.items.last() == Some(&(num_items as u32)) =>
            {
                Some(c.capacity)
            }
            _ => None,
        }
    }

    /// True if `selected` satisfies every constraint.
    pub fn is_feasible(&self, selected: &[bool]) -> bool {
        self.constraints.iter().all(|c| {
            let chosen = c
                .items
                .iter()
                .filter(|&&item| selected[item as usize - 1])
                .count();
            chosen <= c.capacity as usize
        })
    }
}

/// Structural errors raised when assembling an [`Instance`] from raw parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    ZeroDimension(&'static str),
    ProfitsLength { expected: usize, got: usize },
    CostsLength { expected: usize, got: usize },
    /// Diagonal cost storage requires `M == K`.
    DiagShape { num_items: usize, num_resources: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ZeroDimension(what) => write!(f, "{what} must be at least 1"),
            ModelError::ProfitsLength { expected, got } => {
                write!(f, "profit vector has length {got}, expected N*M = {expected}")
            }
            ModelError::CostsLength { expected, got } => {
                write!(f, "cost data has length {got}, expected {expected}")
            }
            ModelError::DiagShape {
                num_items,
                num_resources,
            } => write!(
                f,
                "diagonal costs require M == K, got M = {num_items}, K = {num_resources}"
            ),
        }
    }
}

/// A full problem instance. Immutable once built; group blocks borrow from
/// it and can be shared freely across worker shards.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_groups: usize,
    num_items: usize,
    num_resources: usize,
    budgets: Vec<f64>,
    profits: Vec<f64>,
    costs: CostData,
    locals: LocalConstraintSet,
}

impl Instance {
    pub fn new(
        num_groups: usize,
        num_items: usize,
        budgets: Vec<f64>,
        locals: LocalConstraintSet,
        profits: Vec<f64>,
        costs: CostData,
    ) -> Result<Self, ModelError> {
        if num_groups == 0 {
            return Err(ModelError::ZeroDimension("N"));
        }
        if num_items == 0 {
            return Err(ModelError::ZeroDimension("M"));
        }
        let num_resources = budgets.len();
        if num_resources == 0 {
            return Err(ModelError::ZeroDimension("K"));
        }
        if profits.len() != num_groups * num_items {
            return Err(ModelError::ProfitsLength {
                expected: num_groups * num_items,
                got: profits.len(),
            });
        }
        let expected_costs = match costs {
            CostData::Dense(_) => num_groups * num_items * num_resources,
            CostData::Diag(_) => {
                if num_items != num_resources {
                    return Err(ModelError::DiagShape {
                        num_items,
                        num_resources,
                    });
                }
                num_groups * num_items
            }
        };
        let got = match &costs {
            CostData::Dense(v) | CostData::Diag(v) => v.len(),
        };
        if got != expected_costs {
            return Err(ModelError::CostsLength {
                expected: expected_costs,
                got,
            });
        }
        Ok(Instance {
            num_groups,
            num_items,
            num_resources,
            budgets,
            profits,
            costs,
            locals,
        })
    }

    #[inline]
    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn num_resources(&self) -> usize {
        self.num_resources
    }

    #[inline]
    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    #[inline]
    pub fn locals(&self) -> &LocalConstraintSet {
        &self.locals
    }

    #[inline]
    pub fn is_diag(&self) -> bool {
        matches!(self.costs, CostData::Diag(_))
    }

    /// Borrowed view of group `index` (0-based).
    #[inline]
    pub fn group(&self, index: usize) -> GroupBlock<'_> {
        let m = self.num_items;
        let profits = &self.profits[index * m..(index + 1) * m];
        let costs = match &self.costs {
            CostData::Dense(all) => CostView::Dense {
                rows: &all[index * m * self.num_resources..(index + 1) * m * self.num_resources],
                num_resources: self.num_resources,
            },
            CostData::Diag(all) => CostView::Diag(&all[index * m..(index + 1) * m]),
        };
        GroupBlock {
            group_id: index as u32 + 1,
            profits,
            costs,
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = GroupBlock<'_>> {
        (0..self.num_groups).map(|i| self.group(i))
    }

    /// Copies the listed groups (0-based, in the given order) into a new
    /// instance with the provided budgets. Used by pre-solving.
    pub fn subset(&self, group_indices: &[usize], budgets: Vec<f64>) -> Instance {
        let m = self.num_items;
        let mut profits = Vec::with_capacity(group_indices.len() * m);
        for &i in group_indices {
            profits.extend_from_slice(&self.profits[i * m..(i + 1) * m]);
        }
        let costs = match &self.costs {
            CostData::Dense(all) => {
                let row = m * self.num_resources;
                let mut out = Vec::with_capacity(group_indices.len() * row);
                for &i in group_indices {
                    out.extend_from_slice(&all[i * row..(i + 1) * row]);
                }
                CostData::Dense(out)
            }
            CostData::Diag(all) => {
                let mut out = Vec::with_capacity(group_indices.len() * m);
                for &i in group_indices {
                    out.extend_from_slice(&all[i * m..(i + 1) * m]);
                }
                CostData::Diag(out)
            }
        };
        Instance {
            num_groups: group_indices.len(),
            num_items: m,
            num_resources: self.num_resources,
            budgets,
            profits,
            costs,
            locals: self.locals.clone(),
        }
    }
}

/// Binary decisions for every group plus the aggregate resource usage.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    num_groups: usize,
    num_items: usize,
    selected: Vec<bool>,
    /// Aggregate usage `R_k`, summed over groups in group order.
    pub usage: Vec<f64>,
}

impl Assignment {
    pub fn empty(num_groups: usize, num_items: usize, num_resources: usize) -> Self {
        Assignment {
            num_groups,
            num_items,
            selected: vec![false; num_groups * num_items],
            usage: vec![0.0; num_resources],
        }
    }

    #[inline]
    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    #[inline]
    pub fn group(&self, index: usize) -> &[bool] {
        &self.selected[index * self.num_items..(index + 1) * self.num_items]
    }

    #[inline]
    pub fn group_mut(&mut self, index: usize) -> &mut [bool] {
        &mut self.selected[index * self.num_items..(index + 1) * self.num_items]
    }

    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    /// Total profit, summed in group then item order.
    pub fn primal_value(&self, inst: &Instance) -> f64 {
        let mut total = 0.0;
        for i in 0..self.num_groups {
            let g = inst.group(i);
            for (j, &sel) in self.group(i).iter().enumerate() {
                if sel {
                    total += g.profits[j];
                }
            }
        }
        total
    }

    /// Recomputes `usage` from scratch, in group order.
    pub fn recompute_usage(&mut self, inst: &Instance) {
        let mut usage = vec![0.0; inst.num_resources()];
        for i in 0..self.num_groups {
            inst.group(i).accumulate_usage(self.group(i), &mut usage);
        }
        self.usage = usage;
    }

    /// Checks the stored usage against a fresh recomputation within an
    /// absolute tolerance of `1e-9 * N` per resource.
    pub fn usage_consistent(&self, inst: &Instance) -> bool {
        let mut fresh = self.clone();
        fresh.recompute_usage(inst);
        let tol = 1e-9 * self.num_groups as f64;
        self.usage
            .iter()
            .zip(&fresh.usage)
            .all(|(&a, &b)| (a - b).abs() <= tol)
    }

    /// True if stored usage respects every global budget.
    pub fn globally_feasible(&self, budgets: &[f64]) -> bool {
        self.usage.iter().zip(budgets).all(|(&r, &b)| r <= b)
    }

    /// True if every group satisfies every local constraint.
    pub fn locally_feasible(&self, locals: &LocalConstraintSet) -> bool {
        (0..self.num_groups).all(|i| locals.is_feasible(self.group(i)))
    }
}

/// A violated instance invariant, with enough location detail to find it.
/// Group, item, resource and constraint ids are all 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    /// `B_k` must be strictly positive and finite.
    Budget { resource: usize, value: f64 },
    /// `C_l` must be at least 1.
    Capacity { constraint: usize },
    /// A constraint with no items is meaningless.
    EmptyItems { constraint: usize },
    /// Item id outside `1..=M`.
    ItemOutOfRange { constraint: usize, item: u32 },
    /// Two constraints overlap without one containing the other.
    Hierarchy { first: usize, second: usize },
    NegativeProfit { group: u32, item: u32, value: f64 },
    NegativeCost {
        group: u32,
        item: u32,
        resource: u32,
        value: f64,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Budget { resource, value } => {
                write!(f, "budget B_{resource} = {value} is not strictly positive")
            }
            ValidationIssue::Capacity { constraint } => {
                write!(f, "local constraint {constraint} has capacity 0 (must be >= 1)")
            }
            ValidationIssue::EmptyItems { constraint } => {
                write!(f, "local constraint {constraint} has no items")
            }
            ValidationIssue::ItemOutOfRange { constraint, item } => {
                write!(f, "local constraint {constraint} references item {item} outside [M]")
            }
            ValidationIssue::Hierarchy { first, second } => write!(
                f,
                "local constraints {first} and {second} overlap without nesting"
            ),
            ValidationIssue::NegativeProfit { group, item, value } => {
                write!(f, "profit p[{group},{item}] = {value} is negative")
            }
            ValidationIssue::NegativeCost {
                group,
                item,
                resource,
                value,
            } => write!(f, "cost b[{group},{item},{resource}] = {value} is negative"),
        }
    }
}

/// Outcome of [`validate_instance`]: empty means the instance is valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks every instance invariant and reports all violations found:
/// strictly positive budgets, non-negative profits and costs, well-formed
/// local constraints, and the hierarchy property (any two constraint item
/// sets are disjoint or nested).
///
/// The hierarchy check walks constraints in size order, tracking for each
/// item the largest already-processed set containing it; a set that meets a
/// tracked set partially, without absorbing it whole, is an overlap. This is
/// linear in total item-set size rather than quadratic in `L`.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut issues = Vec::new();

    for (k, &b) in inst.budgets().iter().enumerate() {
        if !(b > 0.0) || !b.is_finite() {
            issues.push(ValidationIssue::Budget {
                resource: k + 1,
                value: b,
            });
        }
    }

    let locals = inst.locals();
    for (l, c) in locals.constraints().iter().enumerate() {
        if c.capacity == 0 {
            issues.push(ValidationIssue::Capacity { constraint: l + 1 });
        }
        if c.items.is_empty() {
            issues.push(ValidationIssue::EmptyItems { constraint: l + 1 });
        }
        for &item in &c.items {
            if item == 0 || item as usize > inst.num_items() {
                issues.push(ValidationIssue::ItemOutOfRange {
                    constraint: l + 1,
                    item,
                });
            }
        }
    }

    // Hierarchy: process in topo (size-ascending) order; `top[j]` is the
    // largest processed constraint containing item j.
    let mut top: Vec<Option<usize>> = vec![None; inst.num_items()];
    let mut owner_counts: Vec<(usize, usize)> = Vec::new();
    for &l in locals.topo_order() {
        let c = &locals.constraints()[l];
        owner_counts.clear();
        for &item in &c.items {
            let slot = item as usize;
            if slot == 0 || slot > inst.num_items() {
                continue;
            }
            if let Some(owner) = top[slot - 1] {
                match owner_counts.iter_mut().find(|(o, _)| *o == owner) {
                    Some((_, n)) => *n += 1,
                    None => owner_counts.push((owner, 1)),
                }
            }
        }
        for &(owner, seen) in &owner_counts {
            if seen != locals.constraints()[owner].items.len() {
                issues.push(ValidationIssue::Hierarchy {
                    first: owner + 1,
                    second: l + 1,
                });
            }
        }
        for &item in &c.items {
            let slot = item as usize;
            if slot >= 1 && slot <= inst.num_items() {
                top[slot - 1] = Some(l);
            }
        }
    }

    for i in 0..inst.num_groups() {
        let g = inst.group(i);
        for (j, &p) in g.profits.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                issues.push(ValidationIssue::NegativeProfit {
                    group: g.group_id,
                    item: j as u32 + 1,
                    value: p,
                });
            }
        }
        match g.costs {
            CostView::Dense { rows, num_resources } => {
                for (idx, &b) in rows.iter().enumerate() {
                    if b < 0.0 || !b.is_finite() {
                        issues.push(ValidationIssue::NegativeCost {
                            group: g.group_id,
                            item: (idx / num_resources) as u32 + 1,
                            resource: (idx % num_resources) as u32 + 1,
                            value: b,
                        });
                    }
                }
            }
            CostView::Diag(diag) => {
                for (j, &b) in diag.iter().enumerate() {
                    if b < 0.0 || !b.is_finite() {
                        issues.push(ValidationIssue::NegativeCost {
                            group: g.group_id,
                            item: j as u32 + 1,
                            resource: j as u32 + 1,
                            value: b,
                        });
                    }
                }
            }
        }
    }

    ValidationReport { issues }
}
