//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! straight to stdout (bypassing libtest capture) and then asserts.

use std::io::Write;

use fairalloc::distributions::Demand;
use fairalloc::oracles::{exhaustive_discrete_max, grid_fractional, grid_slack, monte_carlo};
use fairalloc::solvers::{clamp_to_fair, fair_band, fair_exact_zero, greedy_discrete,
    max_utilization, waterfill_continuous};
use fairalloc::{adversarial_discrete, adversarial_fractional, bound_powerlaw, price_of_fairness,
    scaled_family_check, service_profile, utilization, Allocation, AllocationMode, Group, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(detail) => format!("acceptance {id:>2} PASS  {name}: {detail}"),
        Err(detail) => format!("acceptance {id:>2} FAIL  {name}: {detail}"),
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
    if let Err(detail) = outcome {
        panic!("criterion {id} ({name}) failed: {detail}");
    }
}

fn village(budget: f64, mode: AllocationMode) -> Instance {
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

fn named(demands: Vec<Demand>, budget: f64, mode: AllocationMode) -> Instance {
    let groups = demands
        .into_iter()
        .enumerate()
        .map(|(i, d)| Group::new(format!("g{i}"), d))
        .collect();
    Instance::new(groups, budget, mode).unwrap()
}

/// Discrete demand on a random subset of `0..=max_count` with positive mean.
fn random_discrete(rng: &mut ChaCha8Rng, max_count: u64) -> Demand {
    loop {
        let mut support: Vec<(u64, f64)> = Vec::new();
        for c in 0..=max_count {
            if rng.gen_bool(0.5) {
                support.push((c, rng.gen_range(0.05..1.0)));
            }
        }
        if !support.iter().any(|&(c, _)| c > 0) {
            continue;
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        support.iter_mut().for_each(|(_, p)| *p /= total);
        return Demand::discrete(support).unwrap();
    }
}

fn random_integer_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=4);
    let demands = (0..n).map(|_| random_discrete(rng, 6)).collect();
    named(demands, rng.gen_range(0..=10) as f64, AllocationMode::Integer)
}

fn random_demand(rng: &mut ChaCha8Rng) -> Demand {
    match rng.gen_range(0..4) {
        0 => random_discrete(rng, 4),
        1 => Demand::exponential(rng.gen_range(0.2..5.0)).unwrap(),
        2 => Demand::lomax(rng.gen_range(1.2..5.0)).unwrap(),
        _ => Demand::weibull(rng.gen_range(0.6..3.0), rng.gen_range(0.3..3.0)).unwrap(),
    }
}

#[test]
fn village_fixture() {
    let inst = village(2.0, AllocationMode::Integer);
    let cases = [([0.0, 2.0], 1.4, 2.0 / 3.0), ([1.0, 1.0], 1.1, 1.0 / 6.0), ([2.0, 0.0], 0.8, 1.0)];
    let mut worst = 0.0f64;
    for (alloc, u, gap) in cases {
        let alloc = Allocation(alloc.to_vec());
        worst = worst.max((utilization(&inst, &alloc).unwrap() - u).abs());
        worst = worst.max((service_profile(&inst, &alloc).unwrap().gap - gap).abs());
    }
    let outcome = if worst <= 1e-12 {
        Ok(format!("max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:.3e} > 1e-12"))
    };
    report(1, "village utilization and gaps", outcome);
}

fn integer_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    (0..500).map(|_| random_integer_instance(&mut rng)).collect()
}

#[test]
fn greedy_matches_exhaustive() {
    let mut worst = 0.0f64;
    let mut identical = 0;
    let mut failures = Vec::new();
    for (k, inst) in integer_instances().iter().enumerate() {
        let greedy = greedy_discrete(inst).unwrap().utilization;
        let exact = exhaustive_discrete_max(inst).unwrap().best_value;
        let diff = (greedy - exact).abs();
        worst = worst.max(diff);
        if diff == 0.0 {
            identical += 1;
        }
        if diff > 1e-12 {
            failures.push(k);
        }
    }
    let outcome = if failures.is_empty() {
        Ok(format!("500 instances, {identical} bit-identical, max |diff| {worst:.1e}"))
    } else {
        Err(format!("instances {failures:?} differ, max |diff| {worst:.3e}"))
    };
    report(2, "greedy equals exhaustive optimum", outcome);
}

#[test]
fn grid_never_beats_integer_optimum() {
    let step = 0.05;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (k, inst) in integer_instances().iter().enumerate() {
        let integer_best = exhaustive_discrete_max(inst).unwrap().best_value;
        let frac = inst.as_fractional();
        let grid = grid_fractional(&frac, None, step).unwrap().best_value;
        let excess = grid - integer_best;
        worst_excess = worst_excess.max(excess);
        if excess > grid_slack(&frac, step) + 1e-12 {
            failures.push(k);
        }
    }
    let outcome = if failures.is_empty() {
        Ok(format!("500 instances, max grid − integer {worst_excess:.1e}"))
    } else {
        Err(format!("instances {failures:?} exceed slack"))
    };
    report(3, "fractional grid within slack of integer optimum", outcome);
}

#[test]
fn exponential_pof_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let (mut worst_alloc, mut worst_pof) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let l1 = rng.gen_range(0.1..10.0);
        let l2 = rng.gen_range(0.1..10.0);
        let budget = rng.gen_range(0.1..100.0);
        let inst = named(
            vec![Demand::exponential(l1).unwrap(), Demand::exponential(l2).unwrap()],
            budget,
            AllocationMode::Fractional,
        );
        let rep = waterfill_continuous(&inst).unwrap();
        let w = (1.0 / l1) + (1.0 / l2);
        let closed = [budget / l1 / w, budget / l2 / w];
        for (r, c) in rep.allocation.amounts().iter().zip(closed) {
            worst_alloc = worst_alloc.max((r - c).abs());
        }
        worst_pof = worst_pof.max((price_of_fairness(&inst, 0.0).unwrap().pof - 1.0).abs());
    }
    let outcome = if worst_alloc <= 1e-8 && worst_pof <= 1e-8 {
        Ok(format!("100 instances, allocation dev {worst_alloc:.1e}, |PoF − 1| {worst_pof:.1e}"))
    } else {
        Err(format!("allocation dev {worst_alloc:.3e}, |PoF − 1| {worst_pof:.3e}"))
    };
    report(4, "exponential PoF = 1", outcome);
}

#[test]
fn weibull_same_shape_pof_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst = 0.0f64;
    let mut not_scaled = 0;
    for _ in 0..50 {
        let k = rng.gen_range(0.5..3.0);
        let inst = named(
            vec![
                Demand::weibull(k, rng.gen_range(0.5..5.0)).unwrap(),
                Demand::weibull(k, rng.gen_range(0.5..5.0)).unwrap(),
            ],
            rng.gen_range(0.1..10.0),
            AllocationMode::Fractional,
        );
        if !scaled_family_check(&inst, 64).unwrap() {
            not_scaled += 1;
        }
        worst = worst.max((price_of_fairness(&inst, 0.0).unwrap().pof - 1.0).abs());
    }
    let outcome = if not_scaled == 0 && worst <= 1e-6 {
        Ok(format!("50 instances, |PoF − 1| ≤ {worst:.1e}"))
    } else {
        Err(format!("{not_scaled} failed the family check, |PoF − 1| up to {worst:.3e}"))
    };
    report(5, "Weibull same-shape PoF = 1", outcome);
}

#[test]
fn lomax_harmonic_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut pofs = Vec::with_capacity(1000);
    let mut problems = Vec::new();
    for trial in 0..1000 {
        let h = rng.gen_range(1..=6);
        // α in (1.05, 6]
        let mut alphas: Vec<f64> = (0..h).map(|_| 6.0 - rng.gen_range(0.0..4.95)).collect();
        alphas.sort_by(|a, b| b.total_cmp(a));
        let budget = rng.gen_range(0.1..=100.0);
        let inst = named(
            alphas.iter().map(|&a| Demand::lomax(a).unwrap()).collect(),
            budget,
            AllocationMode::Fractional,
        );
        let rep = price_of_fairness(&inst, 0.0).unwrap();
        let bound = bound_powerlaw(h).unwrap();
        if rep.pof > bound + 1e-6 {
            problems.push(format!("trial {trial}: PoF {} > {bound}", rep.pof));
        }
        let slack = 1e-9 * budget.max(1.0);
        let max = max_utilization(&inst).unwrap();
        for (i, &r) in max.allocation.amounts().iter().enumerate() {
            if r > budget / (h - i) as f64 + slack {
                problems.push(format!("trial {trial}: r_{} = {r} > B/{}", i + 1, h - i));
            }
        }
        let fair = fair_exact_zero(&inst).unwrap();
        let last = fair.allocation.amounts()[h - 1];
        if last < budget / h as f64 - slack {
            problems.push(format!("trial {trial}: r'_h = {last} < B/h"));
        }
        pofs.push(rep.pof);
    }
    pofs.sort_by(f64::total_cmp);
    let pct = |p: f64| pofs[((pofs.len() - 1) as f64 * p).round() as usize];
    let median = pct(0.5);
    let summary = format!(
        "PoF min {:.4} p10 {:.4} median {:.4} p90 {:.4} max {:.4}",
        pofs[0],
        pct(0.1),
        median,
        pct(0.9),
        pofs[pofs.len() - 1]
    );
    let outcome = if problems.is_empty() && median <= 1.5 {
        Ok(format!("1000 instances, {summary}"))
    } else {
        Err(format!("{summary}; {}", problems.join("; ")))
    };
    report(6, "Lomax PoF ≤ n·H_n", outcome);
}

#[test]
fn clamp_meets_inverse_epsilon_guarantee() {
    let mut instances = vec![
        village(2.0, AllocationMode::Fractional),
        village(3.5, AllocationMode::Fractional),
        named(
            vec![Demand::exponential(1.0).unwrap(), Demand::exponential(2.0).unwrap()],
            3.0,
            AllocationMode::Fractional,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    for _ in 0..60 {
        let n = rng.gen_range(1..=4);
        let demands = (0..n).map(|_| random_demand(&mut rng)).collect();
        instances.push(named(demands, rng.gen_range(0.1..20.0), AllocationMode::Fractional));
    }
    let mut problems = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut checked = 0;
    for (k, inst) in instances.iter().enumerate() {
        let u_max = max_utilization(inst).unwrap().utilization;
        for eps in [0.05, 0.1, 0.25, 0.5, 0.9] {
            checked += 1;
            let rep = clamp_to_fair(inst, eps).unwrap();
            let budget = inst.budget();
            if rep.profile.gap > eps + 1e-8 {
                problems.push(format!("#{k} ε={eps}: gap {}", rep.profile.gap));
            }
            if (rep.allocation.total() - budget).abs() > 1e-9 * budget.max(1.0) {
                problems.push(format!("#{k} ε={eps}: spent {} of {budget}", rep.allocation.total()));
            }
            if rep.utilization < eps * u_max - 1e-9 {
                problems.push(format!("#{k} ε={eps}: utilization {} < ε·U_max", rep.utilization));
            }
            if rep.utilization > 0.0 {
                let pof = u_max / rep.utilization;
                worst_ratio = worst_ratio.max(pof * eps);
                if pof > 1.0 / eps + 1e-6 {
                    problems.push(format!("#{k} ε={eps}: PoF {pof} > 1/ε"));
                }
            }
        }
    }
    let outcome = if problems.is_empty() {
        Ok(format!("{checked} (instance, ε) pairs, max ε·PoF {worst_ratio:.4}"))
    } else {
        Err(problems.join("; "))
    };
    report(7, "clamp-and-top-up is ε-fair with PoF ≤ 1/ε", outcome);
}

#[test]
fn adversarial_constructions_exceed_rho() {
    let mut problems = Vec::new();
    let mut cells = Vec::new();
    for eps in [0.2, 0.4, 0.6, 0.8] {
        for rho in [1.0, 2.0, 5.0] {
            let res = adversarial_discrete(eps, rho).unwrap();
            let m = res.measure().unwrap();
            cells.push(format!("d({eps},{rho})={}", m.pof));
            if m.pof.is_nan() || m.pof <= rho {
                problems.push(format!("discrete ε={eps} ρ={rho}: PoF {}", m.pof));
            }
        }
    }
    for rho in [1.5, 2.0, 5.0] {
        for k in [1.0, 2.0] {
            let res = adversarial_fractional(rho, k, 0.5).unwrap();
            let n1 = res.construction_params["n1"];
            let expected = (1.0 + n1) / (2.0 * k);
            let m = res.measure().unwrap();
            cells.push(format!("f({rho},{k})={:.6}", m.pof));
            if (m.pof - expected).abs() > 1e-9 || m.pof.is_nan() || m.pof <= rho {
                problems.push(format!("fractional ρ={rho} k={k}: PoF {} vs {expected}", m.pof));
            }
        }
    }
    let outcome = if problems.is_empty() {
        Ok(format!("18 cells, {}", cells.join(" ")))
    } else {
        Err(problems.join("; "))
    };
    report(8, "adversarial PoF exceeds ρ", outcome);
}

#[test]
fn fair_band_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut problems = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let n = rng.gen_range(2..=3);
        let demands = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => random_discrete(&mut rng, 4),
                1 => Demand::exponential(rng.gen_range(0.2..5.0)).unwrap(),
                _ => Demand::lomax(rng.gen_range(1.2..5.0)).unwrap(),
            })
            .collect();
        let inst = named(demands, rng.gen_range(0.2..3.0), AllocationMode::Fractional);
        let step = 1e-3;
        let slack = grid_slack(&inst, step);
        for eps in [0.0, 0.1, 0.3] {
            let band = fair_band(&inst, eps).unwrap().utilization;
            let grid = grid_fractional(&inst, Some(eps), step).unwrap().best_value;
            worst = worst.max(grid - band);
            if band < grid - slack {
                problems.push(format!("#{k} ε={eps}: fair_band {band} < grid {grid} − {slack}"));
            }
        }
    }
    let outcome = if problems.is_empty() {
        Ok(format!("300 (instance, ε) pairs, max grid − fair_band {worst:.2e}"))
    } else {
        Err(problems.join("; "))
    };
    report(9, "fair_band at least the grid optimum", outcome);
}

#[test]
fn monte_carlo_agrees_and_is_deterministic() {
    let reps = 1_000_000;
    let seed = 20240917;
    let cases = [
        (village(2.0, AllocationMode::Integer), Allocation(vec![1.0, 1.0])),
        (
            named(
                vec![Demand::exponential(1.0).unwrap(), Demand::exponential(2.0).unwrap()],
                3.0,
                AllocationMode::Fractional,
            ),
            Allocation(vec![2.0, 1.0]),
        ),
    ];
    let mut problems = Vec::new();
    let mut details = Vec::new();
    for (inst, alloc) in &cases {
        let analytic = utilization(inst, alloc).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(inst, alloc, reps, seed).unwrap())
        };
        let base = run(1);
        let z = (base.util_estimate - analytic) / base.util_stderr;
        details.push(format!("z = {z:+.2}"));
        if z.abs() > 4.0 {
            problems.push(format!("estimate {} vs {analytic}, z {z:.2}", base.util_estimate));
        }
        for threads in [2, 8] {
            let other = run(threads);
            let same = other.util_estimate.to_bits() == base.util_estimate.to_bits()
                && other.util_stderr.to_bits() == base.util_stderr.to_bits()
                && other.q_estimates.iter().zip(&base.q_estimates).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                problems.push(format!("{threads} threads changed the output"));
            }
        }
    }
    let outcome = if problems.is_empty() {
        Ok(format!("10^6 reps, {}, identical at 1/2/8 threads", details.join(", ")))
    } else {
        Err(problems.join("; "))
    };
    report(10, "Monte Carlo consistency", outcome);
}
