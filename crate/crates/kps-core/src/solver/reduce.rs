//! Per-coordinate reduce: from candidate emissions to the new multiplier.
//!
//! Given the merged `(v1, v2)` emissions for one resource, the new
//! multiplier is 0 when everything fits the budget, otherwise the minimal
//! emitted threshold `v` whose cumulative usage `sum_{v1 >= v} v2` still
//! fits. Usage is piecewise constant in the multiplier, so restricting `v`
//! to emitted values loses nothing.

use alloc::vec::Vec;

/// Result of the exact threshold search for one resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReduceOutcome {
    /// Everything fits; the price drops to zero.
    Zero,
    /// The minimal emitted threshold whose cumulative usage fits, plus the
    /// next distinct emitted value below it (0 when none). Usage is
    /// constant for multipliers in the open interval between them.
    Threshold { value: f64, next_below: f64 },
    /// Even the largest threshold alone exceeds the budget; any multiplier
    /// above `top` predicts zero usage.
    NothingFits { top: f64 },
}

impl ReduceOutcome {
    /// Collapses to the single reduce value: zero, the minimal feasible
    /// threshold, or the next float above the top when nothing fits.
    pub fn threshold(self) -> f64 {
        match self {
            ReduceOutcome::Zero => 0.0,
            ReduceOutcome::Threshold { value, .. } => value,
            ReduceOutcome::NothingFits { top } => top.next_up(),
        }
    }
}

/// Exact threshold search over the merged emissions for one resource.
/// Sorting is stable so ties in `v1` accumulate in merge (group) order and
/// the result does not depend on how the map phase was scheduled.
pub fn exact_reduce_outcome(emissions: &mut [(f64, f64)], budget: f64) -> ReduceOutcome {
    let total: f64 = emissions.iter().map(|&(_, v2)| v2).sum();
    if total <= budget {
        return ReduceOutcome::Zero;
    }
    emissions.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cumulative = 0.0;
    let mut threshold = None;
    let mut i = 0;
    while i < emissions.len() {
        let value = emissions[i].0;
        let mut block = 0.0;
        while i < emissions.len() && emissions[i].0 == value {
            block += emissions[i].1;
            i += 1;
        }
        if cumulative + block <= budget {
            cumulative += block;
            threshold = Some(value);
        } else {
            return match threshold {
                Some(v) => ReduceOutcome::Threshold {
                    value: v,
                    next_below: value,
                },
                None => ReduceOutcome::NothingFits {
                    top: emissions[0].0,
                },
            };
        }
    }
    // total > budget guarantees the loop exits early
    unreachable!("cumulative emissions exceeded the budget without a break")
}

/// The reduce value itself: 0 when everything fits, otherwise the minimal
/// emitted threshold `v` with `sum of v2 over v1 >= v` within budget. When
/// even the largest threshold alone exceeds the budget there is no emitted
/// value with feasible predicted usage; the next representable float above
/// it is returned so the predicted usage at the result is zero.
pub fn exact_reduce(emissions: &mut [(f64, f64)], budget: f64) -> f64 {
    exact_reduce_outcome(emissions, budget).threshold()
}

/// Bucket index for a candidate value relative to the previous multiplier:
/// zero at the center, otherwise `sign(d) * floor(log2(|d| / delta))`.
/// Buckets are finest near the center and grow exponentially away from it.
pub fn bucket_id(value: f64, center: f64, delta: f64) -> i32 {
    let d = value - center;
    if d == 0.0 {
        return 0;
    }
    let magnitude = floor_log2(d.abs() / delta);
    if d > 0.0 {
        magnitude
    } else {
        -magnitude
    }
}

/// Exact `floor(log2(x))` for positive `x`, read off the IEEE exponent.
fn floor_log2(x: f64) -> i32 {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    if exponent == 0x7ff {
        return 1024; // infinity: put it in the outermost bucket
    }
    if exponent == 0 {
        // subnormal: x = mantissa * 2^-1074
        let mantissa = bits & ((1u64 << 52) - 1);
        if mantissa == 0 {
            return -1075; // underflowed ratio; innermost possible bucket
        }
        return 63 - mantissa.leading_zeros() as i32 - 1074;
    }
    exponent - 1023
}

#[derive(Clone, Copy)]
struct Bucket {
    id: i32,
    sum: f64,
    min: f64,
    max: f64,
}

/// Approximate reduce: emissions are pooled into exponential buckets keyed
/// by [`bucket_id`], the cumulative scan runs over whole buckets (by
/// descending observed value), and the threshold is interpolated linearly
/// across the extent of the bucket it falls into.
///
/// Distinct value ranges can share a bucket id (the id formula folds the
/// sub-`delta` neighborhood of both sides onto ids around zero); pooled
/// buckets just span a wider extent, which only costs approximation
/// accuracy, never validity of the scan order.
pub fn bucketed_reduce(emissions: &[(f64, f64)], lambda_prev: f64, delta: f64, budget: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let total: f64 = emissions.iter().map(|&(_, v2)| v2).sum();
    if total <= budget {
        return 0.0;
    }
    let mut buckets: Vec<Bucket> = Vec::new();
    for &(v1, v2) in emissions {
        let id = bucket_id(v1, lambda_prev, delta);
        match buckets.iter_mut().find(|b| b.id == id) {
            Some(b) => {
                b.sum += v2;
                b.min = b.min.min(v1);
                b.max = b.max.max(v1);
            }
            None => buckets.push(Bucket {
                id,
                sum: v2,
                min: v1,
                max: v1,
            }),
        }
    }
    buckets.sort_unstable_by(|a, b| b.max.total_cmp(&a.max).then(b.min.total_cmp(&a.min)));
    let mut cumulative = 0.0;
    for b in &buckets {
        if cumulative + b.sum <= budget {
            cumulative += b.sum;
        } else {
            let fraction = (budget - cumulative) / b.sum;
            return b.max - fraction * (b.max - b.min);
        }
    }
    // total > budget guarantees some bucket overflows
    unreachable!("cumulative bucket sum exceeded the budget without a target bucket")
}
