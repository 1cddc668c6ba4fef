//! The planning loop: iterative deepening over bounded problems, one solver
//! process per depth, plan extraction from the model and a final validation
//! pass over every returned plan.

use std::path::Path;
use std::time::{Duration, Instant};

use tempo_core::bounded::{build_plan, gen_problem, BoundedProblem};
use tempo_core::encode::{encode, EncodeOptions, Formula};
use tempo_core::smtlib::emit_smtlib;
use tempo_core::{validate_plan, ChronicleId, Plan, Problem};

use crate::solver::{check_smt, CheckOutcome, Model, SolverConfig};

#[derive(Debug)]
pub enum SolveOutcome {
    /// A plan was found at the given depth; it has passed the validator.
    Solution { plan: Plan, depth: u32, wall: Duration },
    /// Every depth up to `k_max` is unsatisfiable.
    Exhausted { k_max: u32, wall: Duration },
    /// The deadline elapsed while the given depth was being solved.
    Timeout { depth: u32, wall: Duration },
    /// The solver failed, answered `unknown`, or produced an unusable model.
    SolverError { depth: u32, message: String },
}

/// Runs the iterative-deepening loop: for k = 0, 1, ... build the bounded
/// problem, encode it, hand it to the solver, and either extract and validate
/// a plan or continue one depth further. Optionally persists every depth's
/// script as `depth_<k>.smt2` under `emit_dir`.
pub fn solve(
    problem: &Problem,
    cfg: &SolverConfig,
    opts: &EncodeOptions,
    emit_dir: Option<&Path>,
) -> SolveOutcome {
    let started = Instant::now();
    for k in 0..=cfg.k_max {
        let pi = gen_problem(problem, k);
        let formula = encode(problem, &pi, opts);

        if let Some(dir) = emit_dir {
            let path = dir.join(format!("depth_{k}.smt2"));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, emit_smtlib(&formula))) {
                return SolveOutcome::SolverError {
                    depth: k,
                    message: format!("cannot write {}: {e}", path.display()),
                };
            }
        }

        let remaining = match cfg.deadline {
            Some(deadline) => match deadline.checked_sub(started.elapsed()) {
                Some(r) if !r.is_zero() => Some(r),
                _ => return SolveOutcome::Timeout { depth: k, wall: started.elapsed() },
            },
            None => None,
        };

        match check_smt(&formula, &cfg.command, remaining) {
            CheckOutcome::Unsat => continue,
            CheckOutcome::Timeout => {
                return SolveOutcome::Timeout { depth: k, wall: started.elapsed() }
            }
            CheckOutcome::Error(message) => return SolveOutcome::SolverError { depth: k, message },
            CheckOutcome::Sat(model) => {
                let plan = match extract_solution(&model, problem, &pi, &formula) {
                    Ok(plan) => plan,
                    Err(message) => return SolveOutcome::SolverError { depth: k, message },
                };
                // every returned plan must pass the independent validator
                match validate_plan(problem, &plan) {
                    Ok(report) if report.is_valid() => {}
                    Ok(report) => {
                        return SolveOutcome::SolverError {
                            depth: k,
                            message: format!("extracted plan failed validation:\n{report}"),
                        }
                    }
                    Err(e) => {
                        return SolveOutcome::SolverError {
                            depth: k,
                            message: format!("extracted plan is ill-typed: {e}"),
                        }
                    }
                }
                return SolveOutcome::Solution { plan, depth: k, wall: started.elapsed() };
            }
        }
    }
    SolveOutcome::Exhausted { k_max: cfg.k_max, wall: started.elapsed() }
}

/// Reads the present chronicles and their variable values out of the model.
/// Fails if a present chronicle's parameter decodes outside its domain,
/// which would mean the encoder and solver disagree.
pub fn extract_solution(
    model: &Model,
    problem: &Problem,
    pi: &BoundedProblem,
    formula: &Formula,
) -> Result<Plan, String> {
    let present = |c: ChronicleId| -> bool {
        match formula.presence_name(c) {
            None => true, // constant-true presence
            Some(name) => model.bool(name).unwrap_or(false),
        }
    };
    let value = |v: tempo_core::VarId| -> i64 {
        formula
            .var_name(v)
            .and_then(|name| model.int(name))
            .unwrap_or_default()
    };
    build_plan(problem, pi, &present, &value).map_err(|e| e.to_string())
}
