//! Instances whose Price of Fairness provably exceeds a requested level.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::distributions::Demand;
use crate::error::{check_range, Error, Result};
use crate::oracles::{exhaustive_discrete_fair_with, BudgetUse, EnumerationOptions};
use crate::solvers::{fair_exact_zero, greedy_discrete, max_utilization, AllocationMode, Group,
    Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversarialKind {
    /// Integer allocation of point demands at an ε > 0 fairness level.
    Discrete,
    /// Fractional allocation of two-point demands, ε = 0, fair side allowed a
    /// larger budget.
    Fractional,
}

/// A generated instance with its construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialResult {
    pub instance: Instance,
    pub kind: AdversarialKind,
    /// The requested ρ; the instance's PoF exceeds it.
    pub pof_lower_bound: f64,
    /// PoF implied by the construction.
    pub predicted_pof: f64,
    /// Fairness level the bound refers to.
    pub epsilon: f64,
    /// Budget available to the fair allocation (`k · B` for the fractional
    /// construction, `B` otherwise).
    pub fair_budget: f64,
    pub construction_params: BTreeMap<String, f64>,
}

/// Max and fair utilization measured by the solvers and oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasuredPof {
    pub u_max: f64,
    pub u_fair: f64,
    pub pof: f64,
}

impl AdversarialResult {
    /// Measures the PoF independently of the construction's algebra.
    ///
    /// Discrete: greedy for the maximum and exhaustive enumeration over
    /// ε-fair allocations that may leave units unspent for the fair side.
    /// With every unit spent no allocation of these instances is ε-fair, since
    /// any leftover unit must go to a point-demand group and push it to
    /// service 1 while another such group stays at 0.
    ///
    /// Fractional: water-fill for the maximum at budget `B` and the
    /// equal-service allocation at budget `k · B`.
    pub fn measure(&self) -> Result<MeasuredPof> {
        let (u_max, u_fair) = match self.kind {
            AdversarialKind::Discrete => {
                let u_max = greedy_discrete(&self.instance)?.utilization;
                let opts = EnumerationOptions {
                    budget_use: BudgetUse::AtMost,
                    symmetric: true,
                    ..EnumerationOptions::default()
                };
                let fair = exhaustive_discrete_fair_with(&self.instance, self.epsilon, &opts)?;
                (u_max, fair.best_value)
            }
            AdversarialKind::Fractional => {
                let u_max = max_utilization(&self.instance)?.utilization;
                let fair = fair_exact_zero(&self.fair_instance()?)?;
                (u_max, fair.utilization)
            }
        };
        let pof = if u_fair > 0.0 { u_max / u_fair } else { f64::INFINITY };
        Ok(MeasuredPof { u_max, u_fair, pof })
    }

    /// The instance with the fair-side budget.
    pub fn fair_instance(&self) -> Result<Instance> {
        self.instance.with_budget(self.fair_budget)
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    kind: AdversarialKind,
    pof_lower_bound: f64,
    predicted_pof: f64,
    epsilon: f64,
    fair_budget: f64,
    construction_params: &'a BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct ScenarioWithMeta<'a> {
    #[serde(flatten)]
    instance: &'a Instance,
    meta: Meta<'a>,
}

impl Serialize for AdversarialResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioWithMeta {
            instance: &self.instance,
            meta: Meta {
                kind: self.kind,
                pof_lower_bound: self.pof_lower_bound,
                predicted_pof: self.predicted_pof,
                epsilon: self.epsilon,
                fair_budget: self.fair_budget,
                construction_params: &self.construction_params,
            },
        }
        .serialize(s)
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Integer instance whose best ε-fair utilization is `⌊εn⌋` while the
/// maximum is the whole budget `B`, with `B / ⌊εn⌋ > rho`.
///
/// One group always needs `n = ⌈1/ε⌉` units and `B + 1` groups always need
/// `n′` units, where `n′` is the largest integer below `1/ε`. Serving a low
/// group in full gives it service 1, which forces the high group above
/// `1 − ε` and hence to all `n` units; that in turn forces every low group
/// above 0, more than the budget allows.
pub fn adversarial_discrete(epsilon: f64, rho: f64) -> Result<AdversarialResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: epsilon,
            expected: "in (0, 1)",
        });
    }
    check_range("rho", rho, 1.0, f64::INFINITY, false, "finite and ≥ 1")?;
    let inv = 1.0 / epsilon;
    let nearest = inv.round();
    let integral = (inv - nearest).abs() <= 1e-9 * inv;
    let (n, n_prime) = if integral {
        (nearest, nearest - 1.0)
    } else {
        (inv.ceil(), inv.floor())
    };
    let m_prime = (rho * epsilon * (1.0 + epsilon) / (1.0 - epsilon)).floor() + 1.0;
    let budget = n + n_prime * m_prime;
    let low_groups = budget + 1.0;
    let u_fair = (epsilon * n + 1e-9).floor();

    let mut groups = vec![Group::new("high", Demand::point(n as u64)?)];
    let low = Demand::point(n_prime as u64)?;
    groups.extend((0..low_groups as usize).map(|i| Group::new(format!("low{i}"), low.clone())));
    let instance = Instance::new(groups, budget, AllocationMode::Integer)?;
    Ok(AdversarialResult {
        instance,
        kind: AdversarialKind::Discrete,
        pof_lower_bound: rho,
        predicted_pof: budget / u_fair,
        epsilon,
        fair_budget: budget,
        construction_params: params(&[
            ("epsilon", epsilon),
            ("rho", rho),
            ("n", n),
            ("n_prime", n_prime),
            ("m_prime", m_prime),
            ("m", low_groups),
            ("B", budget),
        ]),
    })
}

/// Fractional instance where equal service (ε = 0) costs more than a factor
/// `rho`, even when the fair allocation may spend `k` times the budget.
///
/// Group 1 needs `n₁` units with probability `p₁`, group 2 needs `n₂ = n₁²`
/// with probability `p₂ = p₁/n₁`; both have mean `p₁n₁` and the budget is
/// `n₁`. The maximum gives everything to group 1; equal service forces
/// `r₁/n₁ = r₂/n₂`, so `PoF = (1 + n₁)/(2k)`.
pub fn adversarial_fractional(rho: f64, k: f64, p1: f64) -> Result<AdversarialResult> {
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::OutOfDomain {
            name: "rho",
            value: rho,
            expected: "finite and > 1",
        });
    }
    check_range("k", k, 1.0, f64::INFINITY, false, "finite and ≥ 1")?;
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::OutOfDomain {
            name: "p1",
            value: p1,
            expected: "in (0, 1)",
        });
    }
    let n1 = (2.0 * k * rho - 1.0).floor() + 1.0;
    let n2 = n1 * n1;
    let p2 = p1 / n1;
    let budget = n1;
    let groups = vec![
        Group::new("g1", Demand::discrete(vec![(0, 1.0 - p1), (n1 as u64, p1)])?),
        Group::new("g2", Demand::discrete(vec![(0, 1.0 - p2), (n2 as u64, p2)])?),
    ];
    let instance = Instance::new(groups, budget, AllocationMode::Fractional)?;
    Ok(AdversarialResult {
        instance,
        kind: AdversarialKind::Fractional,
        pof_lower_bound: rho,
        predicted_pof: (1.0 + n1) / (2.0 * k),
        epsilon: 0.0,
        fair_budget: k * budget,
        construction_params: params(&[
            ("rho", rho),
            ("k", k),
            ("n1", n1),
            ("n2", n2),
            ("p1", p1),
            ("p2", p2),
            ("B", budget),
        ]),
    })
}
