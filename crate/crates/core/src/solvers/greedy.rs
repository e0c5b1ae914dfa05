use crate::distributions::Demand;
use crate::error::{Error, Result};

use super::{Allocation, Instance, SolveReport};

/// Gain in expected served candidates from the unit `r → r + 1`.
///
/// For a discrete demand this is exactly `P(X > r)`; for a continuous one it
/// is `∫_r^{r+1} P(X > t) dt`.
fn unit_gain(d: &Demand, r: f64) -> f64 {
    match d {
        Demand::Discrete(_) => d.survival_raw(r),
        _ => d.expected_min_raw(r + 1.0) - d.expected_min_raw(r),
    }
}

/// Hands out the budget one unit at a time, each to the group with the largest
/// marginal gain (lowest index on ties).
///
/// Expected utilization is a sum of concave per-group terms, so the result is
/// optimal over all integer allocations; for discrete demands it is also
/// optimal over fractional ones.
pub fn greedy_discrete(inst: &Instance) -> Result<SolveReport> {
    let budget = inst.budget();
    if budget.fract() != 0.0 {
        return Err(Error::Unsupported {
            op: "greedy_discrete",
            what: format!("fractional budget {budget}"),
        });
    }
    let demands: Vec<&Demand> = inst.demands().collect();
    let mut amounts = vec![0.0; demands.len()];
    let mut gains: Vec<f64> = demands.iter().map(|d| unit_gain(d, 0.0)).collect();
    for _ in 0..budget as u64 {
        let mut best = 0;
        for (i, &g) in gains.iter().enumerate().skip(1) {
            if g > gains[best] {
                best = i;
            }
        }
        amounts[best] += 1.0;
        gains[best] = unit_gain(demands[best], amounts[best]);
    }
    SolveReport::build(inst, Allocation(amounts), None, budget as usize)
}
