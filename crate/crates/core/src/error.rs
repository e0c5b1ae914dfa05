use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("{name} must be {expected}, got {value}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("allocation has {got} entries but the instance has {expected} groups")]
    Misaligned { expected: usize, got: usize },

    #[error("{op} does not support {what}")]
    Unsupported { op: &'static str, what: String },

    #[error("allocation is not {epsilon}-fair (gap {gap})")]
    NotFair { epsilon: f64, gap: f64 },

    #[error("allocation uses {used} but the budget is {budget}")]
    OverBudget { used: f64, budget: f64 },

    #[error("enumeration would visit {count:.0} candidates, the limit is {limit:.0}")]
    TooLarge { count: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects NaN and values outside `[lo, hi)` / `[lo, hi]`.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    hi_inclusive: bool,
    expected: &'static str,
) -> Result<()> {
    let ok = value >= lo && if hi_inclusive { value <= hi } else { value < hi };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            expected,
        })
    }
}
