//! Utilization, fairness and Price of Fairness.

use serde::{Serialize, Serializer};

use crate::distributions::Demand;
use crate::error::{check_range, Error, Result};
use crate::oracles::{exhaustive_discrete_fair_with, EnumerationOptions};
use crate::solvers::{fair_band, greedy_discrete, max_utilization, Allocation, AllocationMode,
    Instance};

/// Slack on `pof ≤ bound` when filling [`PofReport::bound_satisfied`].
pub const BOUND_SLACK: f64 = 1e-6;
/// Pointwise tolerance of [`scaled_family_check`].
pub const FAMILY_TOL: f64 = 1e-9;

/// Per-group service probabilities and the fairness gap between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceProfile {
    pub q_values: Vec<f64>,
    /// `max q − min q`.
    pub gap: f64,
}

fn check_aligned(inst: &Instance, alloc: &Allocation) -> Result<()> {
    if alloc.len() != inst.len() {
        return Err(Error::Misaligned {
            expected: inst.len(),
            got: alloc.len(),
        });
    }
    for &r in alloc.amounts() {
        check_range("allocation", r, 0.0, f64::INFINITY, false, "finite and ≥ 0")?;
    }
    Ok(())
}

/// Expected number of candidates served: `Σ E[min(X_i, r_i)]`.
pub fn utilization(inst: &Instance, alloc: &Allocation) -> Result<f64> {
    check_aligned(inst, alloc)?;
    Ok(inst
        .demands()
        .zip(alloc.amounts())
        .map(|(d, &r)| d.expected_min_raw(r))
        .sum())
}

pub fn service_profile(inst: &Instance, alloc: &Allocation) -> Result<ServiceProfile> {
    check_aligned(inst, alloc)?;
    let q_values: Vec<f64> = inst
        .demands()
        .zip(alloc.amounts())
        .map(|(d, &r)| d.service_prob_raw(r))
        .collect();
    let hi = q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = q_values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ServiceProfile {
        q_values,
        gap: hi - lo,
    })
}

/// Max and ε-fair utilization of an instance and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PofReport {
    pub u_max: f64,
    pub u_fair: f64,
    /// `u_max / u_fair`; infinite (serialized as `null`) when no ε-fair
    /// allocation serves anyone but some allocation does.
    #[serde(serialize_with = "finite_or_null")]
    pub pof: f64,
    pub pof_infinite: bool,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_inverse_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_powerlaw: Option<f64>,
    pub bound_satisfied: bool,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

/// Price of Fairness at level `epsilon`.
///
/// Integer instances use greedy for the maximum and exhaustive enumeration
/// over allocations that spend the whole budget for the fair side, so they
/// must stay small enough for the enumeration guard. Fractional instances use
/// [`max_utilization`] and [`fair_band`].
pub fn price_of_fairness(inst: &Instance, epsilon: f64) -> Result<PofReport> {
    check_range("epsilon", epsilon, 0.0, 1.0, true, "in [0, 1]")?;
    let (u_max, u_fair) = match inst.mode() {
        AllocationMode::Integer => {
            let u_max = greedy_discrete(inst)?.utilization;
            let u_fair = if epsilon >= 1.0 {
                u_max
            } else {
                let opts = EnumerationOptions {
                    symmetric: true,
                    ..EnumerationOptions::default()
                };
                exhaustive_discrete_fair_with(inst, epsilon, &opts)?.best_value
            };
            (u_max, u_fair)
        }
        AllocationMode::Fractional => {
            let u_max = max_utilization(inst)?.utilization;
            let u_fair = if epsilon >= 1.0 {
                u_max
            } else {
                fair_band(inst, epsilon)?.utilization
            };
            (u_max, u_fair)
        }
    };
    let pof = if u_fair > 0.0 {
        u_max / u_fair
    } else if u_max > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let bound_inverse_eps = (inst.mode() == AllocationMode::Fractional && epsilon > 0.0)
        .then(|| 1.0 / epsilon);
    let bound_powerlaw = inst
        .demands()
        .all(|d| matches!(d, Demand::Lomax(_)))
        .then(|| harmonic_bound(inst.len()));
    let bound_satisfied = [bound_inverse_eps, bound_powerlaw]
        .iter()
        .flatten()
        .all(|&b| pof <= b + BOUND_SLACK);
    Ok(PofReport {
        u_max,
        u_fair,
        pof,
        pof_infinite: pof.is_infinite(),
        epsilon,
        bound_inverse_eps,
        bound_powerlaw,
        bound_satisfied,
    })
}

/// Upper bound `1/ε` on the fractional Price of Fairness.
pub fn bound_inverse_epsilon(epsilon: f64) -> Result<f64> {
    check_range("epsilon", epsilon, 0.0, 1.0, true, "in (0, 1]")?;
    if epsilon == 0.0 {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: epsilon,
            expected: "in (0, 1]",
        });
    }
    Ok(1.0 / epsilon)
}

/// Upper bound `n · H_n` on the ε = 0 Price of Fairness of `n` Lomax groups.
pub fn bound_powerlaw(n_groups: usize) -> Result<f64> {
    if n_groups == 0 {
        return Err(Error::InvalidInstance("bound_powerlaw needs at least one group".into()));
    }
    Ok(harmonic_bound(n_groups))
}

fn harmonic_bound(n: usize) -> f64 {
    n as f64 * (1..=n).map(|k| 1.0 / k as f64).sum::<f64>()
}

/// Whether every pair of demand CDFs are rescalings of each other,
/// `F_i(r) = F_j(r · mean_j / mean_i)`, checked at `grid_points` quantiles of
/// each `F_i`. When true, the max-utilization allocation already gives every
/// group the same service probability.
pub fn scaled_family_check(inst: &Instance, grid_points: usize) -> Result<bool> {
    if let Some(d) = inst.demands().find(|d| !d.is_continuous()) {
        return Err(Error::Unsupported {
            op: "scaled_family_check",
            what: format!("{} demand", d.family()),
        });
    }
    if grid_points == 0 {
        return Err(Error::OutOfDomain {
            name: "grid_points",
            value: 0.0,
            expected: "≥ 1",
        });
    }
    let demands: Vec<&Demand> = inst.demands().collect();
    for (i, di) in demands.iter().enumerate() {
        for k in 1..=grid_points {
            let r = di.quantile_raw(k as f64 / (grid_points + 1) as f64);
            let fi = 1.0 - di.survival_raw(r);
            for (j, dj) in demands.iter().enumerate() {
                if i == j {
                    continue;
                }
                let fj = 1.0 - dj.survival_raw(r * dj.mean() / di.mean());
                if (fi - fj).abs() > FAMILY_TOL {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
