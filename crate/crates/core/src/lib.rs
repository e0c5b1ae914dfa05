//! Splitting a fixed budget across groups whose demand is random.
//!
//! Each group `i` has a demand distribution `X_i`; giving it `r_i` units
//! serves `min(X_i, r_i)` candidates. The crate computes allocations that
//! maximize expected service, allocations whose per-group service
//! probabilities `E[min(X_i, r_i)] / E[X_i]` lie within `ε` of each other, and
//! the ratio between the two optima (the Price of Fairness). Brute-force
//! oracles and Monte Carlo simulation check the solvers.
//!
//! ```
//! use fairalloc::{Demand, Group, Instance, AllocationMode, greedy_discrete};
//!
//! let inst = Instance::new(
//!     vec![
//!         Group::new("A", Demand::discrete(vec![(0, 0.6), (2, 0.4)])?),
//!         Group::new("B", Demand::discrete(vec![(0, 0.3), (3, 0.7)])?),
//!     ],
//!     2.0,
//!     AllocationMode::Integer,
//! )?;
//! let report = greedy_discrete(&inst)?;
//! assert_eq!(report.allocation.amounts(), &[0.0, 2.0]);
//! # Ok::<(), fairalloc::Error>(())
//! ```

pub mod distributions;
pub mod error;
pub mod generators;
pub mod metrics;
pub mod oracles;
pub mod solvers;

pub use distributions::Demand;
pub use error::{Error, Result};
pub use generators::{adversarial_discrete, adversarial_fractional, AdversarialKind,
    AdversarialResult, MeasuredPof};
pub use metrics::{bound_inverse_epsilon, bound_powerlaw, price_of_fairness, scaled_family_check,
    service_profile, utilization, PofReport, ServiceProfile};
pub use oracles::{exhaustive_discrete_fair, exhaustive_discrete_max, grid_fractional, monte_carlo,
    MonteCarloEstimate, OracleResult};
pub use solvers::{clamp_to_fair, fair_band, fair_exact_zero, greedy_discrete, max_utilization,
    top_up, waterfill_continuous, Allocation, AllocationMode, Group, Instance, SolveOptions,
    SolveReport};
