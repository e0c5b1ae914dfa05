use crate::error::{Error, Result};
use crate::metrics::utilization;
use crate::solvers::{Allocation, AllocationMode, Instance};

use super::{OracleMode, OracleResult, CANDIDATE_LIMIT};

/// Score differences at or below this are ties; the earlier candidate wins.
const TIE_TOL: f64 = 1e-12;
const GAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetUse {
    /// Allocations spend the whole budget.
    #[default]
    Exact,
    /// Allocations may leave part of the budget unused.
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    pub budget_use: BudgetUse,
    /// Visit one representative per permutation of groups with identical
    /// demands (their amounts in nonincreasing index order). Utilization and
    /// gap are invariant under such permutations, so the optimum value is
    /// unchanged; only the reported allocation may be a permutation of the
    /// plain enumeration's.
    pub symmetric: bool,
    pub limit: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            budget_use: BudgetUse::Exact,
            symmetric: false,
            limit: CANDIDATE_LIMIT,
        }
    }
}

pub fn exhaustive_discrete_max(inst: &Instance) -> Result<OracleResult> {
    exhaustive_discrete_max_with(inst, &EnumerationOptions::default())
}

/// Best integer allocation by enumeration; ties go to the lexicographically
/// first candidate.
pub fn exhaustive_discrete_max_with(inst: &Instance, opts: &EnumerationOptions) -> Result<OracleResult> {
    enumerate(inst, None, opts)
}

pub fn exhaustive_discrete_fair(inst: &Instance, epsilon: f64) -> Result<OracleResult> {
    exhaustive_discrete_fair_with(inst, epsilon, &EnumerationOptions::default())
}

/// Best integer allocation whose fairness gap is at most `epsilon`.
pub fn exhaustive_discrete_fair_with(
    inst: &Instance,
    epsilon: f64,
    opts: &EnumerationOptions,
) -> Result<OracleResult> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: epsilon,
            expected: "≥ 0",
        });
    }
    enumerate(inst, Some(epsilon), opts)
}

/// Number of candidates [`exhaustive_discrete_max_with`] would visit.
pub fn candidate_count(inst: &Instance, opts: &EnumerationOptions) -> f64 {
    let budget = inst.budget() as usize;
    let classes = if opts.symmetric {
        class_sizes(inst)
    } else {
        vec![1; inst.len()]
    };
    // ways[t]: representatives over the classes so far that spend exactly t
    let mut ways = vec![0.0f64; budget + 1];
    ways[0] = 1.0;
    for size in classes {
        let parts = partitions_at_most(size, budget);
        let mut next = vec![0.0; budget + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (s, &p) in parts.iter().enumerate().take(budget + 1 - t) {
                next[t + s] += w * p;
            }
        }
        ways = next;
    }
    match opts.budget_use {
        BudgetUse::Exact => ways[budget],
        BudgetUse::AtMost => ways.iter().sum(),
    }
}

/// `p[t]` = number of partitions of `t` into at most `k` parts, for `t ≤ max`.
fn partitions_at_most(k: usize, max: usize) -> Vec<f64> {
    let mut p = vec![0.0f64; max + 1];
    p[0] = 1.0;
    for part in 1..=k.min(max.max(1)) {
        // partitions into at most k parts ↔ partitions with parts ≤ k
        for t in part..=max {
            p[t] += p[t - part];
        }
    }
    p
}

/// Sizes of the runs of identical demands, in order of first appearance.
fn class_sizes(inst: &Instance) -> Vec<usize> {
    let prev = previous_twin(inst);
    let mut sizes = Vec::new();
    let mut class_of = vec![0usize; inst.len()];
    for i in 0..inst.len() {
        match prev[i] {
            Some(p) => {
                class_of[i] = class_of[p];
                sizes[class_of[i]] += 1;
            }
            None => {
                class_of[i] = sizes.len();
                sizes.push(1);
            }
        }
    }
    sizes
}

/// For each group, the closest earlier group with an identical demand.
fn previous_twin(inst: &Instance) -> Vec<Option<usize>> {
    let groups = inst.groups();
    (0..groups.len())
        .map(|i| (0..i).rev().find(|&j| groups[j].demand == groups[i].demand))
        .collect()
}

struct Search {
    gains: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    twin: Vec<Option<usize>>,
    epsilon: Option<f64>,
    exact: bool,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    evaluated: u64,
}

impl Search {
    fn visit(&mut self, i: usize, remaining: usize, value: f64, qmin: f64, qmax: f64) {
        let n = self.current.len();
        let cap = match self.twin[i] {
            Some(p) => remaining.min(self.current[p]),
            None => remaining,
        };
        let range = if i + 1 == n && self.exact {
            if remaining > cap {
                return;
            }
            remaining..=remaining
        } else {
            0..=cap
        };
        for r in range {
            self.current[i] = r;
            let v = value + self.gains[i][r];
            let lo = qmin.min(self.q[i][r]);
            let hi = qmax.max(self.q[i][r]);
            if i + 1 < n {
                self.visit(i + 1, remaining - r, v, lo, hi);
                continue;
            }
            self.evaluated += 1;
            if let Some(eps) = self.epsilon {
                if hi - lo > eps + GAP_SLACK {
                    continue;
                }
            }
            let better = match &self.best {
                None => true,
                Some((b, _)) => v > b + TIE_TOL,
            };
            if better {
                self.best = Some((v, self.current.clone()));
            }
        }
    }
}

fn enumerate(inst: &Instance, epsilon: Option<f64>, opts: &EnumerationOptions) -> Result<OracleResult> {
    inst.require_mode("exhaustive enumeration", AllocationMode::Integer)?;
    let count = candidate_count(inst, opts);
    if count > opts.limit {
        return Err(Error::TooLarge {
            count,
            limit: opts.limit,
        });
    }
    let budget = inst.budget() as usize;
    let gains = inst
        .demands()
        .map(|d| (0..=budget).map(|r| d.expected_min_raw(r as f64)).collect())
        .collect();
    let q = inst
        .demands()
        .map(|d| (0..=budget).map(|r| d.service_prob_raw(r as f64)).collect())
        .collect();
    let twin = if opts.symmetric {
        previous_twin(inst)
    } else {
        vec![None; inst.len()]
    };
    let mut search = Search {
        gains,
        q,
        twin,
        epsilon,
        exact: opts.budget_use == BudgetUse::Exact,
        current: vec![0; inst.len()],
        best: None,
        evaluated: 0,
    };
    search.visit(0, budget, 0.0, f64::INFINITY, f64::NEG_INFINITY);
    let evaluated = search.evaluated;
    match search.best {
        Some((_, amounts)) => {
            let allocation = Allocation(amounts.into_iter().map(|r| r as f64).collect());
            let best_value = utilization(inst, &allocation)?;
            Ok(OracleResult {
                best_allocation: allocation,
                best_value,
                evaluated,
                mode: OracleMode::ExhaustiveInteger,
                feasible: true,
            })
        }
        None => Ok(OracleResult {
            best_allocation: Allocation::zeros(inst.len()),
            best_value: 0.0,
            evaluated,
            mode: OracleMode::ExhaustiveInteger,
            feasible: false,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Demand;
    use crate::solvers::fixtures::village;
    use crate::solvers::Group;

    fn points(high: u64, low: u64, n_low: usize, budget: f64) -> Instance {
        let mut groups = vec![Group::new("high", Demand::point(high).unwrap())];
        for i in 0..n_low {
            groups.push(Group::new(format!("low{i}"), Demand::point(low).unwrap()));
        }
        Instance::new(groups, budget, AllocationMode::Integer).unwrap()
    }

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn village_max() {
        let res = exhaustive_discrete_max(&village(2.0, AllocationMode::Integer)).unwrap();
        assert_eq!(res.best_allocation.amounts(), &[0.0, 2.0]);
        assert!((res.best_value - 1.4).abs() < 1e-15);
        assert_eq!(res.evaluated, 3);
    }

    #[test]
    fn zero_budget() {
        let res = exhaustive_discrete_max(&village(0.0, AllocationMode::Integer)).unwrap();
        assert_eq!(res.best_allocation.amounts(), &[0.0, 0.0]);
        assert_eq!(res.best_value, 0.0);
        assert_eq!(res.evaluated, 1);
    }

    #[test]
    fn village_fair() {
        let inst = village(2.0, AllocationMode::Integer);
        let res = exhaustive_discrete_fair(&inst, 0.2).unwrap();
        assert_eq!(res.best_allocation.amounts(), &[1.0, 1.0]);
        assert!((res.best_value - 1.1).abs() < 1e-15);
        let loose = exhaustive_discrete_fair(&inst, 1.0).unwrap();
        assert_eq!(loose, exhaustive_discrete_max(&inst).unwrap());
    }

    #[test]
    fn eight_point_groups() {
        // one group needing 2, seven needing 1, six units
        let inst = points(2, 1, 7, 6.0);
        let res = exhaustive_discrete_max(&inst).unwrap();
        assert_eq!(res.evaluated, 1716);
        assert_eq!(res.best_value, 6.0);
        assert_eq!(candidate_count(&inst, &EnumerationOptions::default()), binom(13, 7));
    }

    #[test]
    fn full_budget_fairness_can_be_infeasible() {
        // Any 6 units over 8 groups leaves a point-1 group with q = 0 while
        // another has q ≥ 1/2.
        let inst = points(2, 1, 7, 6.0);
        let res = exhaustive_discrete_fair(&inst, 0.5).unwrap();
        assert!(!res.feasible);
        assert_eq!(res.best_value, 0.0);

        let opts = EnumerationOptions {
            budget_use: BudgetUse::AtMost,
            ..EnumerationOptions::default()
        };
        let res = exhaustive_discrete_fair_with(&inst, 0.5, &opts).unwrap();
        assert!(res.feasible);
        assert_eq!(res.best_value, 1.0);
    }

    #[test]
    fn symmetric_enumeration_matches_plain() {
        let inst = points(2, 1, 7, 6.0);
        for budget_use in [BudgetUse::Exact, BudgetUse::AtMost] {
            let plain = EnumerationOptions {
                budget_use,
                ..EnumerationOptions::default()
            };
            let sym = EnumerationOptions {
                symmetric: true,
                ..plain
            };
            for eps in [0.0, 0.5, 1.0] {
                let a = exhaustive_discrete_fair_with(&inst, eps, &plain).unwrap();
                let b = exhaustive_discrete_fair_with(&inst, eps, &sym).unwrap();
                assert_eq!(a.best_value, b.best_value);
                assert!(b.evaluated < a.evaluated);
                assert_eq!(b.evaluated as f64, candidate_count(&inst, &sym));
            }
            assert_eq!(
                exhaustive_discrete_max_with(&inst, &plain).unwrap().evaluated as f64,
                candidate_count(&inst, &plain)
            );
        }
    }

    #[test]
    fn guard() {
        let inst = points(2, 1, 30, 30.0);
        assert!(matches!(exhaustive_discrete_max(&inst), Err(Error::TooLarge { .. })));
        let opts = EnumerationOptions {
            symmetric: true,
            ..EnumerationOptions::default()
        };
        assert!(exhaustive_discrete_max_with(&inst, &opts).is_ok());
    }

    #[test]
    fn partition_counts() {
        // p(5) = 7, into at most 2 parts: 5, 4+1, 3+2
        assert_eq!(partitions_at_most(5, 5)[5], 7.0);
        assert_eq!(partitions_at_most(2, 5)[5], 3.0);
        assert_eq!(partitions_at_most(1, 5), vec![1.0; 6]);
    }

    #[test]
    fn fractional_mode_rejected() {
        assert!(exhaustive_discrete_max(&village(2.0, AllocationMode::Fractional)).is_err());
    }
}
