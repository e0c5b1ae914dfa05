//! Demand distributions and the per-group quantities every solver is built on.
//!
//! A [`Demand`] describes the number of candidates `X` that show up in one
//! group during one period. Allocating `r` units to that group serves
//! `min(X, r)` candidates, so the two workhorse quantities are
//!
//! ```text
//! expected_min(r) = E[min(X, r)] = ∫₀^r P(X > t) dt
//! service_prob(r) = E[min(X, r)] / E[X]
//! ```
//!
//! `service_prob` is the chance that a candidate who needs the resource gets
//! it. It is continuous and nondecreasing in `r`, runs from 0 at `r = 0` to 1
//! as `r → ∞`, and has slope at most `1 / E[X]`.
//!
//! Fractional allocations over a discrete demand are evaluated as
//! `Σ p(x)·min(x, r)`, which equals the expected utilization of allocating
//! `⌊r⌋` or `⌈r⌉` units at random with the matching odds.

mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

pub use quadrature::adaptive_simpson;

/// Probabilities of a discrete demand must sum to one within this slack.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Absolute tolerance for survival-function quadrature (Weibull).
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Survival level past which the Weibull tail is treated as empty.
pub const SURVIVAL_CUTOFF: f64 = 1e-14;
/// Absolute tolerance on `r` for bisection-based inverses.
pub const INVERSE_TOL: f64 = 1e-10;

/// Finite-support demand: `(count, probability)` pairs with strictly
/// increasing counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    support: Vec<(u64, f64)>,
    mean: f64,
    max_count: u64,
}

impl Discrete {
    pub fn new(support: Vec<(u64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDemand("discrete support is empty".into()));
        }
        if let Some(w) = support.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidDemand(format!(
                "discrete counts must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        if let Some(&(c, p)) = support
            .iter()
            .find(|(_, p)| !p.is_finite() || *p < 0.0 || *p > 1.0)
        {
            return Err(Error::InvalidDemand(format!(
                "probability of count {c} is {p}, expected a value in [0, 1]"
            )));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDemand(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mean: f64 = support.iter().map(|&(c, p)| c as f64 * p).sum();
        if mean <= 0.0 {
            return Err(Error::InvalidDemand(
                "discrete demand needs positive mass on some count > 0".into(),
            ));
        }
        let max_count = support
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(c, _)| *c)
            .unwrap_or(0);
        Ok(Self {
            support,
            mean,
            max_count,
        })
    }

    pub fn support(&self) -> &[(u64, f64)] {
        &self.support
    }

    /// Largest count carrying positive probability.
    pub fn max_count(&self) -> u64 {
        self.max_count
    }

    fn cdf(&self, x: f64) -> f64 {
        self.support
            .iter()
            .filter(|(c, _)| *c as f64 <= x)
            .map(|(_, p)| p)
            .sum::<f64>()
            .min(1.0)
    }

    fn survival(&self, x: f64) -> f64 {
        self.support
            .iter()
            .filter(|(c, _)| *c as f64 > x)
            .map(|(_, p)| p)
            .sum()
    }

    fn quantile(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let mut cum = 0.0;
        for &(c, p) in &self.support {
            cum += p;
            if cum >= tau {
                return c as f64;
            }
        }
        self.max_count as f64
    }

    fn expected_min(&self, r: f64) -> f64 {
        self.support
            .iter()
            .map(|&(c, p)| p * (c as f64).min(r))
            .sum()
    }

    /// `expected_min` is piecewise linear with kinks at the support points, so
    /// the inverse is found segment by segment.
    fn inverse_service_prob(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        let target = m * self.mean;
        let mut at = 0.0;
        let mut value = 0.0;
        let mut slope = self.survival(0.0);
        for &(c, p) in &self.support {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            let next = value + slope * (c - at);
            if slope > 0.0 && next >= target {
                return (at + (target - value) / slope).min(c);
            }
            at = c;
            value = next;
            slope = (slope - p).max(0.0);
        }
        self.max_count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

const WEIBULL_PANELS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Weibull {
    shape: f64,
    scale: f64,
    mean: f64,
    cutoff: f64,
    /// `cumulative[j]` = ∫ survival over `[0, j · cutoff / WEIBULL_PANELS]`.
    cumulative: Box<[f64; WEIBULL_PANELS + 1]>,
}

impl Weibull {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        let cutoff = scale * (-SURVIVAL_CUTOFF.ln()).powf(1.0 / shape);
        let mut w = Self {
            shape,
            scale,
            mean: 0.0,
            cutoff,
            cumulative: Box::new([0.0; WEIBULL_PANELS + 1]),
        };
        let panel_tol = QUADRATURE_TOL / WEIBULL_PANELS as f64;
        for j in 0..WEIBULL_PANELS {
            let piece = adaptive_simpson(&|t| w.survival(t), w.node(j), w.node(j + 1), panel_tol);
            w.cumulative[j + 1] = w.cumulative[j] + piece;
        }
        w.mean = w.cumulative[WEIBULL_PANELS];
        Ok(w)
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Point beyond which the survival function is below [`SURVIVAL_CUTOFF`].
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn survival(&self, x: f64) -> f64 {
        (-(x / self.scale).powf(self.shape)).exp()
    }

    fn node(&self, j: usize) -> f64 {
        self.cutoff * j as f64 / WEIBULL_PANELS as f64
    }

    /// Table value at the panel start plus quadrature over the partial panel,
    /// so results share one partition and stay monotone up to rounding.
    fn expected_min(&self, r: f64) -> f64 {
        if r >= self.cutoff {
            return self.mean;
        }
        let j = ((r / self.cutoff * WEIBULL_PANELS as f64) as usize).min(WEIBULL_PANELS - 1);
        let start = self.node(j);
        let tol = QUADRATURE_TOL / WEIBULL_PANELS as f64;
        let partial = adaptive_simpson(&|t| self.survival(t), start, r.max(start), tol);
        (self.cumulative[j] + partial).min(self.cumulative[j + 1])
    }

    fn inverse_service_prob(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        let target = m * self.mean;
        let (mut lo, mut hi) = (0.0, self.cutoff);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.expected_min(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Lomax (Pareto type II) demand with density `α / (x + 1)^(α + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lomax {
    alpha: f64,
}

impl Lomax {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::OutOfDomain {
                name: "alpha",
                value: alpha,
                expected: "finite and > 1 (the mean diverges otherwise)",
            });
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            expected: "finite and > 0",
        })
    }
}

/// Demand distribution of a single group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DemandRepr", into = "DemandRepr")]
pub enum Demand {
    Discrete(Discrete),
    Exponential(Exponential),
    Weibull(Weibull),
    Lomax(Lomax),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum DemandRepr {
    Discrete { support: Vec<(u64, f64)> },
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Lomax { alpha: f64 },
}

impl TryFrom<DemandRepr> for Demand {
    type Error = Error;

    fn try_from(repr: DemandRepr) -> Result<Self> {
        match repr {
            DemandRepr::Discrete { support } => Demand::discrete(support),
            DemandRepr::Exponential { rate } => Demand::exponential(rate),
            DemandRepr::Weibull { shape, scale } => Demand::weibull(shape, scale),
            DemandRepr::Lomax { alpha } => Demand::lomax(alpha),
        }
    }
}

impl From<Demand> for DemandRepr {
    fn from(d: Demand) -> Self {
        match d {
            Demand::Discrete(d) => DemandRepr::Discrete { support: d.support },
            Demand::Exponential(e) => DemandRepr::Exponential { rate: e.rate },
            Demand::Weibull(w) => DemandRepr::Weibull {
                shape: w.shape,
                scale: w.scale,
            },
            Demand::Lomax(l) => DemandRepr::Lomax { alpha: l.alpha },
        }
    }
}

impl Demand {
    pub fn discrete(support: Vec<(u64, f64)>) -> Result<Self> {
        Discrete::new(support).map(Demand::Discrete)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Exponential::new(rate).map(Demand::Exponential)
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Weibull::new(shape, scale).map(Demand::Weibull)
    }

    pub fn lomax(alpha: f64) -> Result<Self> {
        Lomax::new(alpha).map(Demand::Lomax)
    }

    /// A demand that always equals `count`.
    pub fn point(count: u64) -> Result<Self> {
        Demand::discrete(vec![(count, 1.0)])
    }

    pub fn family(&self) -> &'static str {
        match self {
            Demand::Discrete(_) => "discrete",
            Demand::Exponential(_) => "exponential",
            Demand::Weibull(_) => "weibull",
            Demand::Lomax(_) => "lomax",
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Demand::Discrete(_))
    }

    /// Expected number of candidates `E[X]`, always positive.
    pub fn mean(&self) -> f64 {
        match self {
            Demand::Discrete(d) => d.mean,
            Demand::Exponential(e) => 1.0 / e.rate,
            Demand::Weibull(w) => w.mean,
            Demand::Lomax(l) => 1.0 / (l.alpha - 1.0),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        nonnegative("x", x)?;
        Ok(match self {
            Demand::Discrete(d) => d.cdf(x),
            _ => 1.0 - self.survival_raw(x),
        })
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        nonnegative("x", x)?;
        Ok(self.survival_raw(x))
    }

    pub(crate) fn survival_raw(&self, x: f64) -> f64 {
        match self {
            Demand::Discrete(d) => d.survival(x),
            Demand::Exponential(e) => (-e.rate * x).exp(),
            Demand::Weibull(w) => w.survival(x),
            Demand::Lomax(l) => (-l.alpha * x.ln_1p()).exp(),
        }
    }

    /// Generalized inverse of the CDF: the least `x ≥ 0` with `F(x) ≥ tau`.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        check_range("tau", tau, 0.0, 1.0, false, "in [0, 1)")?;
        Ok(self.quantile_raw(tau))
    }

    pub(crate) fn quantile_raw(&self, tau: f64) -> f64 {
        match self {
            Demand::Discrete(d) => d.quantile(tau),
            Demand::Exponential(e) => -(-tau).ln_1p() / e.rate,
            Demand::Weibull(w) => w.scale * (-(-tau).ln_1p()).powf(1.0 / w.shape),
            Demand::Lomax(l) => (-(-tau).ln_1p() / l.alpha).exp_m1(),
        }
    }

    /// Least `r` with `P(X > r) ≤ e^(-t)` for the continuous families.
    ///
    /// Working in log-survival keeps large allocations well conditioned: the
    /// plain quantile loses all precision once `1 - tau` underflows.
    pub(crate) fn quantile_log_survival(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Demand::Discrete(d) => d.quantile(-(-t).exp_m1()),
            Demand::Exponential(e) => t / e.rate,
            Demand::Weibull(w) => w.scale * t.powf(1.0 / w.shape),
            Demand::Lomax(l) => (t / l.alpha).exp_m1(),
        }
    }

    /// `E[min(X, r)]`.
    pub fn expected_min(&self, r: f64) -> Result<f64> {
        nonnegative("r", r)?;
        Ok(self.expected_min_raw(r))
    }

    pub(crate) fn expected_min_raw(&self, r: f64) -> f64 {
        match self {
            Demand::Discrete(d) => d.expected_min(r),
            Demand::Exponential(e) => -(-e.rate * r).exp_m1() / e.rate,
            Demand::Weibull(w) => w.expected_min(r),
            Demand::Lomax(l) => {
                -((1.0 - l.alpha) * r.ln_1p()).exp_m1() / (l.alpha - 1.0)
            }
        }
    }

    /// Probability that a candidate in need is served when the group holds
    /// `r` units: `E[min(X, r)] / E[X]`.
    pub fn service_prob(&self, r: f64) -> Result<f64> {
        nonnegative("r", r)?;
        Ok(self.service_prob_raw(r))
    }

    pub(crate) fn service_prob_raw(&self, r: f64) -> f64 {
        (self.expected_min_raw(r) / self.mean()).min(1.0)
    }

    /// Least `r` with `service_prob(r) ≥ m`.
    pub fn inverse_service_prob(&self, m: f64) -> Result<f64> {
        check_range("m", m, 0.0, 1.0, false, "in [0, 1)")?;
        Ok(self.inverse_service_prob_raw(m))
    }

    /// Like [`Demand::inverse_service_prob`] but accepts `m = 1`, which maps to
    /// [`Demand::saturation_point`] (infinite for unbounded closed forms).
    pub(crate) fn inverse_service_prob_raw(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        if m >= 1.0 {
            return self.saturation_point().unwrap_or(f64::INFINITY);
        }
        match self {
            Demand::Discrete(d) => d.inverse_service_prob(m),
            Demand::Exponential(e) => -(-m).ln_1p() / e.rate,
            Demand::Weibull(w) => w.inverse_service_prob(m),
            Demand::Lomax(l) => (-(-m).ln_1p() / (l.alpha - 1.0)).exp_m1(),
        }
    }

    /// Inverse service probability at level `m = 1 - e^(-u)`.
    pub(crate) fn inverse_service_prob_log(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self {
            Demand::Exponential(e) => u / e.rate,
            Demand::Lomax(l) => (u / (l.alpha - 1.0)).exp_m1(),
            _ => self.inverse_service_prob_raw(-(-u).exp_m1()),
        }
    }

    /// Smallest allocation at which every candidate is always served
    /// (`service_prob = 1`), if one exists in floating point.
    ///
    /// For Weibull this is the survival cutoff, beyond which `expected_min`
    /// returns the mean.
    pub fn saturation_point(&self) -> Option<f64> {
        match self {
            Demand::Discrete(d) => Some(d.max_count as f64),
            Demand::Weibull(w) => Some(w.cutoff),
            Demand::Exponential(_) | Demand::Lomax(_) => None,
        }
    }

    /// Draws one demand realization from a uniform variate `u ∈ [0, 1)` by
    /// inverse transform.
    pub fn sample(&self, u: f64) -> f64 {
        self.quantile_raw(u.clamp(0.0, 1.0 - f64::EPSILON))
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<()> {
    check_range(name, value, 0.0, f64::INFINITY, true, "≥ 0")
}
