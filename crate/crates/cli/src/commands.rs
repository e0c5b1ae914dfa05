use std::path::Path;

use fairalloc::oracles::{exhaustive_discrete_fair_with, exhaustive_discrete_max_with,
    grid_fractional, grid_slack, EnumerationOptions, OracleResult};
use fairalloc::solvers::{fair_band_with, max_utilization_with};
use fairalloc::{adversarial_discrete, adversarial_fractional, monte_carlo, price_of_fairness,
    scaled_family_check, service_profile, utilization, Allocation, AllocationMode, Error,
    Instance, SolveOptions};
use serde::Serialize;

use crate::output::{cell, csv_table, emit, exact_json, round_sig, rounded_json};
use crate::{scenario, CliError, Format, Kind, Objective};

/// Agreement tolerance between a solver and an exact oracle.
const VERIFY_TOL: f64 = 1e-9;
/// Grid points the fractional verification may visit.
const VERIFY_GRID_POINTS: f64 = 1e6;

#[derive(Debug, Serialize)]
struct SolveOutput {
    objective: Objective,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    mode: AllocationMode,
    method: &'static str,
    groups: Vec<String>,
    allocation: Vec<f64>,
    utilization: f64,
    q_values: Vec<f64>,
    gap: f64,
    level: Option<f64>,
    iterations: u64,
    residual: f64,
    /// False when no allocation meets the fairness constraint.
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<Verification>,
}

#[derive(Debug, Serialize)]
struct Verification {
    oracle: String,
    /// False when no grid point or candidate met the fairness constraint.
    oracle_feasible: bool,
    oracle_value: f64,
    solver_value: f64,
    tolerance: f64,
    evaluated: u64,
    agrees: bool,
}

impl Serialize for Objective {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Objective::Max => "max",
            Objective::Fair => "fair",
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(CliError::Input(format!("--epsilon must be in [0, 1], got {epsilon}")))
    }
}

/// Plain enumeration, falling back to the symmetry-reduced one when the plain
/// candidate count exceeds the guard.
fn enumerate(
    inst: &Instance,
    epsilon: Option<f64>,
    symmetric: bool,
) -> Result<(OracleResult, &'static str), CliError> {
    let run = |symmetric: bool| {
        let opts = EnumerationOptions {
            symmetric,
            ..EnumerationOptions::default()
        };
        match epsilon {
            Some(eps) => exhaustive_discrete_fair_with(inst, eps, &opts),
            None => exhaustive_discrete_max_with(inst, &opts),
        }
    };
    if symmetric {
        return Ok((run(true)?, "symmetric exhaustive enumeration"));
    }
    match run(false) {
        Ok(res) => Ok((res, "exhaustive enumeration")),
        Err(Error::TooLarge { .. }) => Ok((run(true)?, "symmetric exhaustive enumeration")),
        Err(e) => Err(e.into()),
    }
}

/// Grid step keeping the fractional oracle under [`VERIFY_GRID_POINTS`] points.
/// Rounded up to 1, 2 or 5 times a power of ten so round amounts lie on the grid.
fn verify_step(inst: &Instance) -> f64 {
    let budget = inst.budget();
    if inst.len() == 1 || budget == 0.0 {
        return budget.max(1.0);
    }
    let per_axis = VERIFY_GRID_POINTS.powf(1.0 / (inst.len() - 1) as f64);
    let raw = budget / (per_axis - 1.0).max(1.0);
    let scale = 10f64.powi(raw.log10().floor() as i32);
    let mantissa = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .find(|&m| m * scale >= raw * (1.0 - 1e-12))
        .unwrap_or(10.0);
    mantissa * scale
}

pub fn solve(
    path: &Path,
    objective: Objective,
    epsilon: f64,
    verify: bool,
    opts: &SolveOptions,
    out: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let inst = scenario::load(path)?;
    check_epsilon(epsilon)?;
    let fair_eps = (objective == Objective::Fair).then_some(epsilon);

    let mut output = match (inst.mode(), objective) {
        (AllocationMode::Integer, Objective::Fair) => {
            let (res, method) = enumerate(&inst, fair_eps, false)?;
            let profile = service_profile(&inst, &res.best_allocation)?;
            SolveOutput {
                objective,
                epsilon: fair_eps,
                mode: inst.mode(),
                method,
                groups: Vec::new(),
                allocation: res.best_allocation.0.clone(),
                utilization: res.best_value,
                q_values: profile.q_values,
                gap: profile.gap,
                level: None,
                iterations: res.evaluated,
                residual: (res.best_allocation.total() - inst.budget()).abs(),
                feasible: res.feasible,
                verification: None,
            }
        }
        _ => {
            let (rep, method) = match objective {
                Objective::Max => {
                    let method = match inst.mode() {
                        AllocationMode::Integer => "greedy",
                        AllocationMode::Fractional => "water-filling",
                    };
                    (max_utilization_with(&inst, opts)?, method)
                }
                Objective::Fair => (fair_band_with(&inst, epsilon, opts)?, "band water-filling"),
            };
            SolveOutput {
                objective,
                epsilon: fair_eps,
                mode: inst.mode(),
                method,
                groups: Vec::new(),
                allocation: rep.allocation.0,
                utilization: rep.utilization,
                q_values: rep.profile.q_values,
                gap: rep.profile.gap,
                level: rep.level,
                iterations: rep.iterations as u64,
                residual: rep.residual,
                feasible: true,
                verification: None,
            }
        }
    };
    output.groups = inst.groups().iter().map(|g| g.name.clone()).collect();

    if verify {
        output.verification = Some(run_verification(&inst, objective, fair_eps, &output)?);
    }

    let text = match format {
        Format::Json => rounded_json(&output)?,
        Format::Csv => solve_csv(&output)?,
    };
    emit(out, &text)?;
    match &output.verification {
        Some(v) if !v.agrees => Err(CliError::Mismatch(format!(
            "{} gives {} but the solver gives {}",
            v.oracle, v.oracle_value, v.solver_value
        ))),
        _ => Ok(()),
    }
}

fn run_verification(
    inst: &Instance,
    objective: Objective,
    fair_eps: Option<f64>,
    output: &SolveOutput,
) -> Result<Verification, CliError> {
    let solver_value = output.utilization;
    match inst.mode() {
        AllocationMode::Integer => {
            // the fair solve already is an enumeration; check it against the
            // symmetry-reduced one, which visits different candidates
            let symmetric = objective == Objective::Fair;
            let (res, method) = enumerate(inst, fair_eps, symmetric)?;
            let agrees = res.feasible == output.feasible
                && (res.best_value - solver_value).abs() <= VERIFY_TOL;
            Ok(Verification {
                oracle: method.to_string(),
                oracle_feasible: res.feasible,
                oracle_value: res.best_value,
                solver_value,
                tolerance: VERIFY_TOL,
                evaluated: res.evaluated,
                agrees,
            })
        }
        AllocationMode::Fractional => {
            let step = verify_step(inst);
            let res = grid_fractional(inst, fair_eps, step)?;
            let slack = grid_slack(inst, step) + VERIFY_TOL;
            let mut agrees = solver_value >= res.best_value - slack;
            if objective == Objective::Max {
                agrees &= solver_value <= res.best_value + slack;
            }
            if let Some(eps) = fair_eps {
                agrees &= output.gap <= eps + 1e-8;
            }
            Ok(Verification {
                oracle: format!("grid search, step {}", round_sig(step)),
                oracle_feasible: res.feasible,
                oracle_value: res.best_value,
                solver_value,
                tolerance: slack,
                evaluated: res.evaluated,
                agrees,
            })
        }
    }
}

fn solve_csv(o: &SolveOutput) -> Result<String, CliError> {
    let header = [
        "row", "group", "allocation", "q_value", "utilization", "gap", "level", "residual",
        "oracle_value", "verified",
    ];
    let mut rows: Vec<Vec<String>> = o
        .groups
        .iter()
        .zip(o.allocation.iter().zip(&o.q_values))
        .map(|(name, (&r, &q))| {
            let mut row = vec!["group".to_string(), name.clone(), cell(Some(r)), cell(Some(q))];
            row.resize(header.len(), String::new());
            row
        })
        .collect();
    let (oracle_value, verified) = match &o.verification {
        Some(v) => (cell(Some(v.oracle_value)), v.agrees.to_string()),
        None => (String::new(), String::new()),
    };
    rows.push(vec![
        "summary".into(),
        String::new(),
        cell(Some(o.allocation.iter().sum())),
        String::new(),
        cell(Some(o.utilization)),
        cell(Some(o.gap)),
        cell(o.level),
        cell(Some(o.residual)),
        oracle_value,
        verified,
    ]);
    csv_table(&header, &rows)
}

pub fn pof(path: &Path, epsilon: f64, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let inst = scenario::load(path)?;
    check_epsilon(epsilon)?;
    let rep = price_of_fairness(&inst, epsilon)?;
    let text = match format {
        Format::Json => rounded_json(&rep)?,
        Format::Csv => csv_table(
            &[
                "u_max", "u_fair", "pof", "pof_infinite", "epsilon", "bound_inverse_eps",
                "bound_powerlaw", "bound_satisfied",
            ],
            &[vec![
                cell(Some(rep.u_max)),
                cell(Some(rep.u_fair)),
                cell(Some(rep.pof)),
                rep.pof_infinite.to_string(),
                cell(Some(rep.epsilon)),
                cell(rep.bound_inverse_eps),
                cell(rep.bound_powerlaw),
                rep.bound_satisfied.to_string(),
            ]],
        )?,
    };
    emit(out, &text)
}

#[derive(Debug, Serialize)]
struct GenerateSummary {
    kind: fairalloc::AdversarialKind,
    pof_lower_bound: f64,
    predicted_pof: f64,
    measured_pof: Option<f64>,
    u_max: f64,
    u_fair: f64,
}

pub fn generate(
    kind: Kind,
    rho: f64,
    epsilon: Option<f64>,
    k: f64,
    p1: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let res = match kind {
        Kind::Discrete => {
            let eps = epsilon
                .ok_or_else(|| CliError::Input("--epsilon is required for --kind discrete".into()))?;
            adversarial_discrete(eps, rho)?
        }
        Kind::Fractional => adversarial_fractional(rho, k, p1)?,
    };
    let measured = res.measure()?;
    let summary = GenerateSummary {
        kind: res.kind,
        pof_lower_bound: res.pof_lower_bound,
        predicted_pof: res.predicted_pof,
        measured_pof: measured.pof.is_finite().then_some(measured.pof),
        u_max: measured.u_max,
        u_fair: measured.u_fair,
    };
    let summary = rounded_json(&summary)?;
    emit(out, &exact_json(&res)?)?;
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    reps: u64,
    seed: u64,
    groups: Vec<String>,
    allocation: Vec<f64>,
    util_estimate: f64,
    util_stderr: f64,
    util_analytic: f64,
    q_estimates: Vec<f64>,
    q_stderr: Vec<f64>,
    q_analytic: Vec<f64>,
}

fn parse_allocation(text: &str) -> Result<Allocation, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Input(format!("--allocation entry {:?}: {e}", s.trim())))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Allocation)
}

pub fn simulate(
    path: &Path,
    allocation: &str,
    reps: u64,
    seed: u64,
    out: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let inst = scenario::load(path)?;
    let alloc = parse_allocation(allocation)?;
    let est = monte_carlo(&inst, &alloc, reps, seed)?;
    let output = SimulateOutput {
        reps,
        seed,
        groups: inst.groups().iter().map(|g| g.name.clone()).collect(),
        util_analytic: utilization(&inst, &alloc)?,
        q_analytic: service_profile(&inst, &alloc)?.q_values,
        allocation: alloc.0,
        util_estimate: est.util_estimate,
        util_stderr: est.util_stderr,
        q_estimates: est.q_estimates,
        q_stderr: est.q_stderr,
    };
    let text = match format {
        Format::Json => rounded_json(&output)?,
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = (0..output.groups.len())
                .map(|i| {
                    vec![
                        "group".into(),
                        output.groups[i].clone(),
                        cell(Some(output.allocation[i])),
                        cell(Some(output.q_estimates[i])),
                        cell(Some(output.q_stderr[i])),
                        cell(Some(output.q_analytic[i])),
                    ]
                })
                .collect();
            rows.push(vec![
                "summary".into(),
                String::new(),
                cell(Some(output.allocation.iter().sum())),
                cell(Some(output.util_estimate)),
                cell(Some(output.util_stderr)),
                cell(Some(output.util_analytic)),
            ]);
            csv_table(&["row", "group", "allocation", "estimate", "stderr", "analytic"], &rows)?
        }
    };
    emit(out, &text)
}

pub fn check_family(path: &Path, grid_points: usize, out: Option<&Path>) -> Result<(), CliError> {
    let inst = scenario::load(path)?;
    let scaled = scaled_family_check(&inst, grid_points)?;
    let text = rounded_json(&serde_json::json!({
        "scaled_family": scaled,
        "grid_points": grid_points,
    }))?;
    emit(out, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_parsing() {
        assert_eq!(parse_allocation("1, 2.5,0").unwrap().0, vec![1.0, 2.5, 0.0]);
        assert!(parse_allocation("1,,2").is_err());
        assert!(parse_allocation("a").is_err());
    }

    #[test]
    fn verify_step_stays_under_point_budget() {
        let inst: Instance = scenario::parse(
            r#"{"budget": 3, "mode": "fractional", "groups": [
                {"name": "a", "distribution": {"type": "exponential", "rate": 1}},
                {"name": "b", "distribution": {"type": "exponential", "rate": 2}},
                {"name": "c", "distribution": {"type": "lomax", "alpha": 3}}
            ]}"#,
        )
        .unwrap();
        let step = verify_step(&inst);
        assert!((3.0 / step + 1.0).powi(2) <= VERIFY_GRID_POINTS * 1.0001);
        assert_eq!(step, 0.005);
    }
}
