use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::Demand;
use crate::error::{Error, Result};
use crate::metrics::service_profile;
use crate::solvers::{Allocation, Instance};

/// Replicates per parallel work item. Fixed so the reduction tree does not
/// depend on the thread count.
const BLOCK: u64 = 4096;
/// ChaCha words consumed per (replicate, group): two `u64` draws.
const WORDS_PER_DRAW: u128 = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub reps: u64,
    pub util_estimate: f64,
    pub util_stderr: f64,
    /// Sample mean of `min(X_i, r_i)` divided by the analytic mean of `X_i`.
    pub q_estimates: Vec<f64>,
    pub q_stderr: Vec<f64>,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count / count;
        self.m2 += other.m2 + delta * delta * self.count * other.count / count;
        self.count = count;
    }

    fn stderr(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.m2 / (self.count - 1.0) / self.count).sqrt()
        }
    }
}

/// Uniform on the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Simulates `reps` independent demand draws and serves `min(X_i, r_i)` in
/// every group. A fractional amount over a discrete demand is realized as
/// `⌈r⌉` with probability `frac(r)` and `⌊r⌋` otherwise.
///
/// Draw `(replicate, group)` comes from the ChaCha8 stream `group` of `seed`
/// at a position fixed by `replicate`, and blocks are merged in order, so the
/// result is bit-identical for any number of threads.
pub fn monte_carlo(inst: &Instance, alloc: &Allocation, reps: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if reps == 0 {
        return Err(Error::OutOfDomain {
            name: "reps",
            value: 0.0,
            expected: "≥ 1",
        });
    }
    // validates alignment and amounts
    service_profile(inst, alloc)?;
    let demands: Vec<&Demand> = inst.demands().collect();
    let amounts = alloc.amounts();
    let n = demands.len();

    let blocks: Vec<(Moments, Vec<Moments>)> = (0..reps.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(reps);
            let mut rngs: Vec<ChaCha8Rng> = (0..n)
                .map(|g| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(g as u64);
                    rng.set_word_pos(start as u128 * WORDS_PER_DRAW);
                    rng
                })
                .collect();
            let mut total = Moments::default();
            let mut per_group = vec![Moments::default(); n];
            for _ in start..end {
                let mut served_total = 0.0;
                for g in 0..n {
                    let rng = &mut rngs[g];
                    let x = demands[g].sample(open_unit(rng));
                    let v = open_unit(rng);
                    let r = amounts[g];
                    let r = if demands[g].is_continuous() || r.fract() == 0.0 {
                        r
                    } else if v < r.fract() {
                        r.ceil()
                    } else {
                        r.floor()
                    };
                    let served = x.min(r);
                    per_group[g].push(served);
                    served_total += served;
                }
                total.push(served_total);
            }
            (total, per_group)
        })
        .collect();

    let mut total = Moments::default();
    let mut per_group = vec![Moments::default(); n];
    for (t, groups) in &blocks {
        total.merge(t);
        for (acc, m) in per_group.iter_mut().zip(groups) {
            acc.merge(m);
        }
    }
    Ok(MonteCarloEstimate {
        reps,
        util_estimate: total.mean,
        util_stderr: total.stderr(),
        q_estimates: per_group.iter().zip(&demands).map(|(m, d)| m.mean / d.mean()).collect(),
        q_stderr: per_group.iter().zip(&demands).map(|(m, d)| m.stderr() / d.mean()).collect(),
    })
}
