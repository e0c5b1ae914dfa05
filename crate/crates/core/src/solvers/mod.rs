//! Allocation problems and the solvers for them.
//!
//! An [`Instance`] is a budget to split across groups with known demand
//! distributions. The solvers here find
//!
//! * max-utilization allocations ([`greedy_discrete`] for unit allocations,
//!   [`waterfill_continuous`] and [`max_utilization`] for fractional ones),
//! * ε-fair max-utilization allocations ([`fair_exact_zero`], [`fair_band`]),
//! * the constructive ε-fair allocation with utilization at least
//!   `ε · U_max` ([`clamp_to_fair`], built on [`top_up`]).

mod fair;
mod greedy;
mod waterfill;

use serde::{Deserialize, Serialize};

use crate::distributions::Demand;
use crate::error::{Error, Result};
use crate::metrics::{self, ServiceProfile};

pub use fair::{clamp_to_fair, clamp_to_fair_with, fair_band, fair_band_with, fair_exact_zero,
    fair_exact_zero_with, top_up, top_up_with};
pub use greedy::greedy_discrete;
pub use waterfill::{max_utilization, max_utilization_with, waterfill_continuous,
    waterfill_continuous_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    /// Whole units only; the budget must be a nonnegative integer.
    Integer,
    /// Any nonnegative real amounts.
    Fractional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub name: String,
    #[serde(rename = "distribution")]
    pub demand: Demand,
}

impl Group {
    pub fn new(name: impl Into<String>, demand: Demand) -> Self {
        Self {
            name: name.into(),
            demand,
        }
    }
}

/// A budget to split across groups.
///
/// Serializes as `{"budget", "mode", "groups"}`; a `meta` object is accepted
/// and ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    groups: Vec<Group>,
    budget: f64,
    mode: AllocationMode,
}

impl Instance {
    pub fn new(groups: Vec<Group>, budget: f64, mode: AllocationMode) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidInstance("at least one group is required".into()));
        }
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidInstance(format!(
                "budget must be finite and nonnegative, got {budget}"
            )));
        }
        if mode == AllocationMode::Integer && budget.fract() != 0.0 {
            return Err(Error::InvalidInstance(format!(
                "integer allocation needs an integer budget, got {budget}"
            )));
        }
        Ok(Self {
            groups,
            budget,
            mode,
        })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn mode(&self) -> AllocationMode {
        self.mode
    }

    pub fn demands(&self) -> impl Iterator<Item = &Demand> + '_ {
        self.groups.iter().map(|g| &g.demand)
    }

    /// Same groups and mode with a different budget.
    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::new(self.groups.clone(), budget, self.mode)
    }

    /// Same groups and budget, fractional allocation allowed.
    pub fn as_fractional(&self) -> Self {
        Self {
            mode: AllocationMode::Fractional,
            ..self.clone()
        }
    }

    pub fn all_continuous(&self) -> bool {
        self.demands().all(Demand::is_continuous)
    }

    pub fn all_discrete(&self) -> bool {
        self.demands().all(|d| !d.is_continuous())
    }

    pub(crate) fn require_mode(&self, op: &'static str, mode: AllocationMode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::Unsupported {
                op,
                what: format!("{:?} allocation mode", self.mode).to_lowercase(),
            })
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRepr {
    budget: f64,
    mode: AllocationMode,
    groups: Vec<Group>,
    #[serde(default, skip_serializing)]
    #[allow(dead_code)]
    meta: Option<serde::de::IgnoredAny>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(repr: InstanceRepr) -> Result<Self> {
        Instance::new(repr.groups, repr.budget, repr.mode)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        Self {
            budget: inst.budget,
            mode: inst.mode,
            groups: inst.groups,
            meta: None,
        }
    }
}

/// Per-group amounts, aligned with [`Instance::groups`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<f64>);

impl Allocation {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn amounts(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|r| r.fract() == 0.0)
    }
}

impl From<Vec<f64>> for Allocation {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub allocation: Allocation,
    pub utilization: f64,
    pub profile: ServiceProfile,
    /// Water level `τ` for water-filling, common service level `m` for the
    /// fair solvers, absent for greedy.
    pub level: Option<f64>,
    pub iterations: usize,
    /// `|Σ amounts − budget|`.
    pub residual: f64,
}

impl SolveReport {
    pub(crate) fn build(
        inst: &Instance,
        allocation: Allocation,
        level: Option<f64>,
        iterations: usize,
    ) -> Result<Self> {
        let utilization = metrics::utilization(inst, &allocation)?;
        let profile = metrics::service_profile(inst, &allocation)?;
        let residual = (allocation.total() - inst.budget()).abs();
        Ok(Self {
            allocation,
            utilization,
            profile,
            level,
            iterations,
            residual,
        })
    }
}

/// Tolerances shared by the bisection-based solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// A search stops once `|Σ r − B| ≤ budget_tol · max(1, B)`.
    pub budget_tol: f64,
    /// Iteration cap for every bisection.
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            budget_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl SolveOptions {
    pub(crate) fn tolerance(&self, budget: f64) -> f64 {
        self.budget_tol * budget.max(1.0)
    }
}

/// Scales `amounts` so they sum to `budget` exactly (up to rounding).
pub(crate) fn rescale_to_budget(amounts: &mut [f64], budget: f64) {
    let total: f64 = amounts.iter().sum();
    if total > 0.0 && budget > 0.0 {
        let factor = budget / total;
        amounts.iter_mut().for_each(|r| *r *= factor);
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn village(budget: f64, mode: AllocationMode) -> Instance {
        Instance::new(
            vec![
                Group::new("A", Demand::discrete(vec![(0, 0.6), (2, 0.4)]).unwrap()),
                Group::new("B", Demand::discrete(vec![(0, 0.3), (3, 0.7)]).unwrap()),
            ],
            budget,
            mode,
        )
        .unwrap()
    }

    pub fn exponentials(rates: &[f64], budget: f64) -> Instance {
        let groups = rates
            .iter()
            .enumerate()
            .map(|(i, &l)| Group::new(format!("g{i}"), Demand::exponential(l).unwrap()))
            .collect();
        Instance::new(groups, budget, AllocationMode::Fractional).unwrap()
    }

    pub fn lomaxes(alphas: &[f64], budget: f64) -> Instance {
        let groups = alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| Group::new(format!("g{i}"), Demand::lomax(a).unwrap()))
            .collect();
        Instance::new(groups, budget, AllocationMode::Fractional).unwrap()
    }
}
