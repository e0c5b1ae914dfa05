//! Water-filling for fractional max-utilization.
//!
//! The marginal value of one more unit in group `i` is its survival
//! `P(X_i > r_i)`. At the optimum every group that receives anything sits at
//! the same survival level, i.e. all CDFs equal a common `τ`. Both searches
//! below run on `t = −ln(1 − τ)` rather than `τ` itself so that budgets deep
//! in the tail stay representable.

use crate::distributions::Demand;
use crate::error::{Error, Result};

use super::{greedy_discrete, rescale_to_budget, Allocation, AllocationMode, Instance,
    SolveOptions, SolveReport};

pub fn waterfill_continuous(inst: &Instance) -> Result<SolveReport> {
    waterfill_continuous_with(inst, &SolveOptions::default())
}

/// Max-utilization fractional allocation for continuous demands: binary search
/// on the common CDF level until the allocation uses the budget.
pub fn waterfill_continuous_with(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    inst.require_mode("waterfill_continuous", AllocationMode::Fractional)?;
    if let Some(d) = inst.demands().find(|d| !d.is_continuous()) {
        return Err(Error::Unsupported {
            op: "waterfill_continuous",
            what: format!("{} demand (use greedy_discrete or max_utilization)", d.family()),
        });
    }
    let budget = inst.budget();
    let n = inst.len();
    if budget == 0.0 {
        return SolveReport::build(inst, Allocation::zeros(n), Some(0.0), 0);
    }
    let at_level = |t: f64| -> Vec<f64> {
        inst.demands().map(|d| d.quantile_log_survival(t)).collect()
    };
    let total = |t: f64| -> f64 { at_level(t).iter().sum() };
    let tol = opts.tolerance(budget);

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while total(hi) < budget {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
    }
    let mut t = hi;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        t = 0.5 * (lo + hi);
        let s = total(t);
        if (s - budget).abs() <= tol {
            converged = true;
            break;
        }
        if s < budget {
            lo = t;
        } else {
            hi = t;
        }
    }
    let mut amounts = at_level(t);
    if converged {
        rescale_to_budget(&mut amounts, budget);
    }
    let tau = -(-t).exp_m1();
    SolveReport::build(inst, Allocation(amounts), Some(tau), iterations)
}

pub fn max_utilization(inst: &Instance) -> Result<SolveReport> {
    max_utilization_with(inst, &SolveOptions::default())
}

/// Max-utilization allocation for any instance.
///
/// Integer mode runs [`greedy_discrete`]. Fractional mode runs
/// [`waterfill_continuous`] when every demand is continuous and the general
/// concave water-fill otherwise; for all-discrete instances with an integer
/// budget the optimum is integral and matches greedy.
pub fn max_utilization_with(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    match inst.mode() {
        AllocationMode::Integer => greedy_discrete(inst),
        AllocationMode::Fractional if inst.all_continuous() => waterfill_continuous_with(inst, opts),
        AllocationMode::Fractional => {
            let demands: Vec<&Demand> = inst.demands().collect();
            let n = demands.len();
            let fill = box_waterfill(
                &demands,
                &vec![0.0; n],
                &vec![f64::INFINITY; n],
                inst.budget(),
                opts.max_iter,
            );
            SolveReport::build(inst, Allocation(fill.amounts), Some(1.0 - fill.marginal), fill.iterations)
        }
    }
}

pub(crate) struct BoxFill {
    pub amounts: Vec<f64>,
    /// Common marginal value `P(X_i > r_i)` of the unclamped groups.
    pub marginal: f64,
    pub iterations: usize,
}

/// Least `r ≥ 0` whose survival is at most `e^(-t)`.
fn level_point(d: &Demand, t: f64) -> f64 {
    match d {
        Demand::Discrete(disc) => {
            let cap = (-t).exp();
            let mut tail: f64 = disc.support().iter().map(|(_, p)| p).sum();
            let mut point = 0.0;
            for &(c, p) in disc.support() {
                if c as f64 > point {
                    // tail here is P(X > point) for the current point
                    if tail <= cap {
                        return point;
                    }
                    point = c as f64;
                }
                tail -= p;
            }
            point.min(disc.max_count() as f64)
        }
        _ => d.quantile_log_survival(t),
    }
}

/// Maximizes `Σ E[min(X_i, r_i)]` subject to `lo_i ≤ r_i ≤ hi_i` and
/// `Σ r_i = budget`, for any mix of discrete and continuous demands.
///
/// Each group's utilization is concave with right-derivative `P(X_i > r)`, so
/// the optimum fills every group up to a common survival level. Bisection
/// brackets that level; the budget left between the two bracket allocations
/// belongs to segments whose marginal lies inside the bracket and is handed
/// out in index order. Surplus beyond every group's saturation point goes to
/// the first group with room. Callers ensure `Σ lo ≤ budget ≤ Σ hi`.
pub(crate) fn box_waterfill(
    demands: &[&Demand],
    lo: &[f64],
    hi: &[f64],
    budget: f64,
    max_iter: usize,
) -> BoxFill {
    let at = |t: f64| -> Vec<f64> {
        demands
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(d, (&l, &h))| level_point(d, t).max(l).min(h))
            .collect()
    };
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let floor_total = sum(lo);
    if floor_total >= budget {
        return BoxFill {
            amounts: lo.to_vec(),
            marginal: 1.0,
            iterations: 0,
        };
    }

    // Survival is exactly zero past every saturation point.
    let saturated = at(f64::INFINITY);
    if sum(&saturated) <= budget {
        let mut amounts = saturated;
        distribute(&mut amounts, hi, budget);
        return BoxFill {
            amounts,
            marginal: 0.0,
            iterations: 0,
        };
    }

    let mut t_lo = 0.0;
    let mut t_hi = 1.0;
    let mut iterations = 0;
    while sum(&at(t_hi)) <= budget {
        t_lo = t_hi;
        t_hi *= 2.0;
        iterations += 1;
    }
    while iterations < max_iter && t_hi - t_lo > 1e-15 * t_hi.max(1.0) {
        iterations += 1;
        let mid = 0.5 * (t_lo + t_hi);
        if sum(&at(mid)) > budget {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    let mut amounts = at(t_lo);
    let upper = at(t_hi);
    distribute(&mut amounts, &upper, budget);
    BoxFill {
        amounts,
        marginal: (-t_lo).exp(),
        iterations,
    }
}

/// Adds `budget − Σ amounts` in index order without exceeding `cap`.
fn distribute(amounts: &mut [f64], cap: &[f64], budget: f64) {
    let mut left = budget - amounts.iter().sum::<f64>();
    for (r, &c) in amounts.iter_mut().zip(cap) {
        if left <= 0.0 {
            break;
        }
        let add = (c - *r).max(0.0).min(left);
        *r += add;
        left -= add;
    }
}
