use crate::error::{check_range, Error, Result};
use crate::metrics::utilization;
use crate::solvers::{Allocation, AllocationMode, Instance};

use super::{OracleMode, OracleResult, CANDIDATE_LIMIT};

const TIE_TOL: f64 = 1e-12;
const GAP_SLACK: f64 = 1e-9;

/// Utilization lost at worst by restricting all but the last group to
/// multiples of `step`: `Σ (1 − F_i(0)) · step`.
pub fn grid_slack(inst: &Instance, step: f64) -> f64 {
    inst.demands().map(|d| d.survival_raw(0.0)).sum::<f64>() * step
}

/// Best allocation whose first `n − 1` amounts are multiples of `step`, the
/// last group taking whatever budget is left. With `epsilon` set, only
/// allocations with fairness gap at most `epsilon` count.
pub fn grid_fractional(inst: &Instance, epsilon: Option<f64>, step: f64) -> Result<OracleResult> {
    inst.require_mode("grid_fractional", AllocationMode::Fractional)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::OutOfDomain {
            name: "step",
            value: step,
            expected: "finite and > 0",
        });
    }
    if let Some(eps) = epsilon {
        check_range("epsilon", eps, 0.0, 1.0, true, "in [0, 1]")?;
    }
    let budget = inst.budget();
    let n = inst.len();
    let count = (budget / step + 1.0).powi(n as i32 - 1);
    if count > CANDIDATE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: CANDIDATE_LIMIT,
        });
    }
    let steps = (budget / step * (1.0 + 1e-12)).floor() as usize;
    let demands: Vec<_> = inst.demands().collect();
    // amount of group i (i < n − 1) at grid index k is k·step; the last
    // group's table is indexed by the number of steps the others used
    let amount = |i: usize, k: usize| {
        if i + 1 < n {
            (k as f64 * step).min(budget)
        } else {
            (budget - k as f64 * step).max(0.0)
        }
    };
    let gains: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..=steps).map(|k| demands[i].expected_min_raw(amount(i, k))).collect())
        .collect();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..=steps).map(|k| demands[i].service_prob_raw(amount(i, k))).collect())
        .collect();

    let mut search = GridSearch {
        gains: &gains,
        q: &q,
        epsilon,
        steps,
        current: vec![0; n],
        best: None,
        evaluated: 0,
    };
    search.visit(0, 0, 0.0, f64::INFINITY, f64::NEG_INFINITY);

    let evaluated = search.evaluated;
    match search.best {
        Some((_, ks)) => {
            let used: usize = ks[..n - 1].iter().sum();
            let amounts = (0..n)
                .map(|i| if i + 1 < n { amount(i, ks[i]) } else { amount(i, used) })
                .collect();
            let allocation = Allocation(amounts);
            let best_value = utilization(inst, &allocation)?;
            Ok(OracleResult {
                best_allocation: allocation,
                best_value,
                evaluated,
                mode: OracleMode::GridFractional,
                feasible: true,
            })
        }
        None => Ok(OracleResult {
            best_allocation: Allocation::zeros(n),
            best_value: 0.0,
            evaluated,
            mode: OracleMode::GridFractional,
            feasible: false,
        }),
    }
}

struct GridSearch<'a> {
    gains: &'a [Vec<f64>],
    q: &'a [Vec<f64>],
    epsilon: Option<f64>,
    steps: usize,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    evaluated: u64,
}

impl GridSearch<'_> {
    fn visit(&mut self, i: usize, used: usize, value: f64, qmin: f64, qmax: f64) {
        let n = self.current.len();
        if i + 1 == n {
            self.evaluated += 1;
            let v = value + self.gains[i][used];
            let lo = qmin.min(self.q[i][used]);
            let hi = qmax.max(self.q[i][used]);
            if let Some(eps) = self.epsilon {
                if hi - lo > eps + GAP_SLACK {
                    return;
                }
            }
            if self.best.as_ref().is_none_or(|(b, _)| v > b + TIE_TOL) {
                self.best = Some((v, self.current.clone()));
            }
            return;
        }
        for k in 0..=(self.steps - used) {
            self.current[i] = k;
            self.visit(
                i + 1,
                used + k,
                value + self.gains[i][k],
                qmin.min(self.q[i][k]),
                qmax.max(self.q[i][k]),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Demand;
    use crate::solvers::fixtures::{exponentials, village};
    use crate::solvers::Group;

    #[test]
    fn village_equal_service() {
        let inst = village(2.0, AllocationMode::Fractional);
        let res = grid_fractional(&inst, Some(0.0), 1e-3).unwrap();
        let r = res.best_allocation.amounts();
        assert!((r[0] - 0.8).abs() < 2e-3 && (r[1] - 1.2).abs() < 2e-3, "{r:?}");
        assert!((res.best_value - 1.16).abs() < 2e-3);
        assert_eq!(res.evaluated, 2001);
    }

    #[test]
    fn village_band() {
        let inst = village(2.0, AllocationMode::Fractional);
        let res = grid_fractional(&inst, Some(0.2), 1e-3).unwrap();
        let r = res.best_allocation.amounts();
        assert!((r[0] - 0.56).abs() < 2e-3 && (r[1] - 1.44).abs() < 2e-3, "{r:?}");
        assert!((res.best_value - 1.232).abs() < 2e-3);
    }

    #[test]
    fn single_group_takes_budget() {
        let inst = exponentials(&[1.0], 0.7);
        let res = grid_fractional(&inst, None, 5.0).unwrap();
        assert_eq!(res.best_allocation.amounts(), &[0.7]);
        assert_eq!(res.evaluated, 1);
    }

    #[test]
    fn slack_counts_mass_above_zero() {
        let inst = Instance::new(
            vec![
                Group::new("d", Demand::discrete(vec![(0, 0.25), (1, 0.75)]).unwrap()),
                Group::new("e", Demand::exponential(1.0).unwrap()),
            ],
            1.0,
            AllocationMode::Fractional,
        )
        .unwrap();
        assert!((grid_slack(&inst, 0.1) - 0.175).abs() < 1e-15);
    }

    #[test]
    fn guard_and_bad_step() {
        let inst = exponentials(&[1.0, 1.0, 1.0, 1.0], 10.0);
        assert!(matches!(grid_fractional(&inst, None, 1e-3), Err(Error::TooLarge { .. })));
        assert!(grid_fractional(&inst, None, 0.0).is_err());
        assert!(grid_fractional(&village(2.0, AllocationMode::Integer), None, 0.1).is_err());
    }

    #[test]
    fn infeasible_filter() {
        // two point-1 groups and 1.5 units: the grid with step 1 cannot balance
        let inst = Instance::new(
            vec![
                Group::new("a", Demand::point(1).unwrap()),
                Group::new("b", Demand::point(1).unwrap()),
            ],
            1.5,
            AllocationMode::Fractional,
        )
        .unwrap();
        let res = grid_fractional(&inst, Some(0.1), 1.0).unwrap();
        assert!(!res.feasible);
        assert_eq!(res.best_value, 0.0);
    }
}
