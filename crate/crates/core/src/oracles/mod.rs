//! Brute-force ground truth for the solvers: exhaustive integer enumeration,
//! a fractional grid search and Monte Carlo simulation of the demand model.

mod enumerate;
mod grid;
mod monte_carlo;

use serde::Serialize;

use crate::solvers::Allocation;

pub use enumerate::{candidate_count, exhaustive_discrete_fair, exhaustive_discrete_fair_with,
    exhaustive_discrete_max, exhaustive_discrete_max_with, BudgetUse, EnumerationOptions};
pub use grid::{grid_fractional, grid_slack};
pub use monte_carlo::{monte_carlo, MonteCarloEstimate};

/// Largest number of candidates an oracle will visit.
pub const CANDIDATE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    ExhaustiveInteger,
    GridFractional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best_allocation: Allocation,
    pub best_value: f64,
    /// Number of candidate allocations scored.
    pub evaluated: u64,
    pub mode: OracleMode,
    /// False when no candidate met the fairness filter; `best_value` is then 0
    /// and `best_allocation` all zeros.
    pub feasible: bool,
}
