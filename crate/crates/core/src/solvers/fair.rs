//! ε-fair allocations: every group's service probability within `ε` of every
//! other group's.

use crate::distributions::Demand;
use crate::error::{check_range, Error, Result};
use crate::metrics;

use super::waterfill::box_waterfill;
use super::{max_utilization_with, rescale_to_budget, Allocation, AllocationMode, Instance,
    SolveOptions, SolveReport};

/// Slack allowed on the fairness gap of an allocation handed to [`top_up`].
const GAP_SLACK: f64 = 1e-8;
const BAND_GRID: usize = 200;
const GOLDEN_ITERS: usize = 80;

pub fn fair_exact_zero(inst: &Instance) -> Result<SolveReport> {
    fair_exact_zero_with(inst, &SolveOptions::default())
}

/// The unique allocation that gives every group the same service probability
/// and uses the whole budget.
///
/// When every group saturates before the budget runs out, each gets its
/// saturation point, the surplus goes to the first group and the level is 1.
pub fn fair_exact_zero_with(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    inst.require_mode("fair_exact_zero", AllocationMode::Fractional)?;
    let budget = inst.budget();
    let n = inst.len();
    if budget == 0.0 {
        return SolveReport::build(inst, Allocation::zeros(n), Some(0.0), 0);
    }
    let saturation: Option<Vec<f64>> = inst.demands().map(Demand::saturation_point).collect();
    if let Some(mut sat) = saturation {
        let total: f64 = sat.iter().sum();
        if total <= budget {
            sat[0] += budget - total;
            return SolveReport::build(inst, Allocation(sat), Some(1.0), 0);
        }
    }

    let at_level = |u: f64| -> Vec<f64> {
        inst.demands().map(|d| d.inverse_service_prob_log(u)).collect()
    };
    let total = |u: f64| -> f64 { at_level(u).iter().sum() };
    let tol = opts.tolerance(budget);

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while total(hi) < budget {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
    }
    let mut u = hi;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        u = 0.5 * (lo + hi);
        let s = total(u);
        if (s - budget).abs() <= tol {
            converged = true;
            break;
        }
        if s < budget {
            lo = u;
        } else {
            hi = u;
        }
    }
    let mut amounts = at_level(u);
    if converged {
        rescale_to_budget(&mut amounts, budget);
    }
    SolveReport::build(inst, Allocation(amounts), Some(-(-u).exp_m1()), iterations)
}

pub fn fair_band(inst: &Instance, epsilon: f64) -> Result<SolveReport> {
    fair_band_with(inst, epsilon, &SolveOptions::default())
}

/// Max-utilization allocation among those with fairness gap at most `epsilon`.
///
/// For a fixed band floor `m` the problem is a box-constrained concave
/// water-fill with `q_i⁻¹(m) ≤ r_i ≤ q_i⁻¹(m + ε)`. The floor is searched on a
/// uniform grid followed by golden-section refinement around the best grid
/// point; the equal-service allocation is always a candidate, so the result
/// never falls below it.
pub fn fair_band_with(inst: &Instance, epsilon: f64, opts: &SolveOptions) -> Result<SolveReport> {
    inst.require_mode("fair_band", AllocationMode::Fractional)?;
    check_range("epsilon", epsilon, 0.0, 1.0, true, "in [0, 1]")?;
    if epsilon == 0.0 {
        return fair_exact_zero_with(inst, opts);
    }
    if epsilon == 1.0 {
        return max_utilization_with(inst, opts);
    }
    let equal = fair_exact_zero_with(inst, opts)?;
    let m0 = equal.level.unwrap_or(0.0);
    let budget = inst.budget();
    let demands: Vec<&Demand> = inst.demands().collect();

    let evaluate = |m: f64| -> Option<(f64, Vec<f64>, usize)> {
        let lo: Vec<f64> = demands.iter().map(|d| d.inverse_service_prob_raw(m)).collect();
        let hi: Vec<f64> = if m + epsilon >= 1.0 {
            vec![f64::INFINITY; demands.len()]
        } else {
            demands.iter().map(|d| d.inverse_service_prob_raw(m + epsilon)).collect()
        };
        let slack = opts.tolerance(budget);
        if lo.iter().sum::<f64>() > budget + slack || hi.iter().sum::<f64>() < budget - slack {
            return None;
        }
        let fill = box_waterfill(&demands, &lo, &hi, budget, opts.max_iter);
        let value = demands
            .iter()
            .zip(&fill.amounts)
            .map(|(d, &r)| d.expected_min_raw(r))
            .sum();
        Some((value, fill.amounts, fill.iterations))
    };

    let floor_lo = (m0 - epsilon).max(0.0);
    let floor_hi = m0.min(1.0 - epsilon).max(floor_lo);
    let mut best_value = equal.utilization;
    let mut best: (Vec<f64>, f64) = (equal.allocation.0.clone(), m0);
    let mut iterations = equal.iterations;
    let score = |v: Option<(f64, Vec<f64>, usize)>| v.map_or(f64::NEG_INFINITY, |x| x.0);

    let step = (floor_hi - floor_lo) / BAND_GRID as f64;
    let mut grid_best = (f64::NEG_INFINITY, 0usize);
    for k in 0..=BAND_GRID {
        let m = floor_lo + step * k as f64;
        if let Some((value, amounts, it)) = evaluate(m) {
            iterations += it;
            if value > grid_best.0 {
                grid_best = (value, k);
            }
            if value > best_value {
                best_value = value;
                best = (amounts, m);
            }
        }
    }

    if grid_best.0.is_finite() && step > 0.0 {
        let k = grid_best.1;
        let mut a = floor_lo + step * k.saturating_sub(1) as f64;
        let mut b = (floor_lo + step * (k + 1) as f64).min(floor_hi);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = score(evaluate(c));
        let mut fd = score(evaluate(d));
        for _ in 0..GOLDEN_ITERS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = score(evaluate(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = score(evaluate(d));
            }
            iterations += 1;
        }
        let m = 0.5 * (a + b);
        if let Some((value, amounts, it)) = evaluate(m) {
            iterations += it;
            if value > best_value {
                best = (amounts, m);
            }
        }
    }
    SolveReport::build(inst, Allocation(best.0), Some(best.1), iterations)
}

pub fn clamp_to_fair(inst: &Instance, epsilon: f64) -> Result<SolveReport> {
    clamp_to_fair_with(inst, epsilon, &SolveOptions::default())
}

/// ε-fair allocation with utilization at least `ε · U_max`: start from the
/// max-utilization allocation, cut every group served with probability above
/// `ε` back to exactly `ε`, then [`top_up`] the freed budget.
pub fn clamp_to_fair_with(inst: &Instance, epsilon: f64, opts: &SolveOptions) -> Result<SolveReport> {
    inst.require_mode("clamp_to_fair", AllocationMode::Fractional)?;
    check_range("epsilon", epsilon, 0.0, 1.0, true, "in (0, 1]")?;
    if epsilon == 0.0 {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: epsilon,
            expected: "in (0, 1]",
        });
    }
    let max = max_utilization_with(inst, opts)?;
    let cap = |d: &Demand| d.inverse_service_prob_raw(epsilon);
    let clamped: Vec<f64> = inst
        .demands()
        .zip(max.allocation.amounts())
        .map(|(d, &r)| if d.service_prob_raw(r) > epsilon { cap(d).min(r) } else { r })
        .collect();
    top_up_with(inst, &Allocation(clamped), epsilon, opts)
}

pub fn top_up(inst: &Instance, alloc: &Allocation, epsilon: f64) -> Result<SolveReport> {
    top_up_with(inst, alloc, epsilon, &SolveOptions::default())
}

/// Spends the budget left over by an ε-fair allocation without breaking
/// ε-fairness and without taking anything away from any group.
///
/// First every group is raised to the current highest service level. Then the
/// first group is lifted by up to `ε` and the others follow it, repeating until
/// the level reaches 1 or the budget runs out; anything left after that goes to
/// the first group.
pub fn top_up_with(
    inst: &Instance,
    alloc: &Allocation,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    inst.require_mode("top_up", AllocationMode::Fractional)?;
    check_range("epsilon", epsilon, 0.0, 1.0, true, "in [0, 1]")?;
    let profile = metrics::service_profile(inst, alloc)?;
    if profile.gap > epsilon + GAP_SLACK {
        return Err(Error::NotFair {
            epsilon,
            gap: profile.gap,
        });
    }
    let budget = inst.budget();
    let used = alloc.total();
    if used > budget + opts.tolerance(budget) {
        return Err(Error::OverBudget { used, budget });
    }
    let demands: Vec<&Demand> = inst.demands().collect();
    let mut r = alloc.0.clone();
    let mut remaining = (budget - used).max(0.0);
    let mut iterations = 0;

    let mut level = profile.q_values.iter().copied().fold(0.0, f64::max);
    remaining = raise_floor(&demands, &mut r, level, remaining, opts, &mut iterations);
    let tiny = |x: f64| x <= 0.0;
    while !tiny(remaining) && level < 1.0 && epsilon > 0.0 {
        let target = (level + epsilon).min(1.0);
        let need = (demands[0].inverse_service_prob_raw(target) - r[0]).max(0.0);
        if need >= remaining {
            r[0] += remaining;
            remaining = 0.0;
            break;
        }
        r[0] += need;
        remaining -= need;
        remaining = raise_floor(&demands, &mut r, target, remaining, opts, &mut iterations);
        level = target;
    }
    if epsilon == 0.0 && !tiny(remaining) {
        remaining = raise_floor(&demands, &mut r, 1.0, remaining, opts, &mut iterations);
    }
    if !tiny(remaining) {
        r[0] += remaining;
    }
    let level = metrics::service_profile(inst, &Allocation(r.clone()))?
        .q_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    SolveReport::build(inst, Allocation(r), Some(level), iterations)
}

/// Raises every group below service level `target` up to it, or as far as
/// `remaining` allows when it cannot reach it. Returns the unspent budget.
fn raise_floor(
    demands: &[&Demand],
    r: &mut [f64],
    target: f64,
    remaining: f64,
    opts: &SolveOptions,
    iterations: &mut usize,
) -> f64 {
    let lifted = |beta: f64, r: &[f64]| -> Vec<f64> {
        demands
            .iter()
            .zip(r)
            .map(|(d, &x)| d.inverse_service_prob_raw(beta).max(x))
            .collect()
    };
    let need = |beta: f64, r: &[f64]| -> f64 {
        lifted(beta, r).iter().zip(r).map(|(a, b)| a - b).sum()
    };
    let full = need(target, r);
    if full <= remaining {
        let next = lifted(target, r);
        r.copy_from_slice(&next);
        return remaining - full;
    }
    let mut lo = demands
        .iter()
        .zip(r.iter())
        .map(|(d, &x)| d.service_prob_raw(x))
        .fold(f64::INFINITY, f64::min)
        .min(target);
    let mut hi = target;
    let mut steps = 0;
    while steps < opts.max_iter && hi - lo > 1e-15 {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        if need(mid, r) <= remaining {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    *iterations += steps;
    let spent = need(lo, r);
    let next = lifted(lo, r);
    r.copy_from_slice(&next);
    let lowest = demands
        .iter()
        .zip(r.iter())
        .enumerate()
        .min_by(|a, b| {
            let qa = a.1 .0.service_prob_raw(*a.1 .1);
            let qb = b.1 .0.service_prob_raw(*b.1 .1);
            qa.total_cmp(&qb)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    r[lowest] += (remaining - spent).max(0.0);
    0.0
}
