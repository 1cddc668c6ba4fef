//! Independent plan validation: grounds the tokens of the initial chronicle
//! and of every plan step, then re-checks the timeline semantics (coherence,
//! support) and every chronicle constraint directly, without going through
//! the CSP encoding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::{CmpOp, Constraint, Term};
use crate::ground::{check_tokens, GroundCondition, GroundEffect, GroundSv, GroundViolation};
use crate::model::{ActionTemplate, Chronicle, Problem, StateVarRef, TypeKind, VarId};
use crate::plan::{Plan, PlanValue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// Two present effects impose values on the same ground state variable
    /// over overlapping intervals.
    CoherenceOverlap { effect_a: String, effect_b: String },
    /// A present condition has no establishing effect covering its interval.
    UnsupportedCondition { condition: String },
    /// A chronicle constraint does not hold under the plan's bindings.
    ConstraintViolation { chronicle: String, constraint: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::CoherenceOverlap { effect_a, effect_b } => {
                write!(f, "coherence-overlap: {effect_a} overlaps {effect_b}")
            }
            Violation::UnsupportedCondition { condition } => {
                write!(f, "unsupported-condition: {condition}")
            }
            Violation::ConstraintViolation { chronicle, constraint } => {
                write!(f, "constraint-violation: {chronicle}: {constraint}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            writeln!(f, "valid")
        } else {
            writeln!(f, "invalid ({} violations)", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  {v}")?;
            }
            Ok(())
        }
    }
}

/// Ill-typed plans are rejected before any semantic checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanError {
    UnknownAction { action: String },
    ArityMismatch { action: String, expected: usize, got: usize },
    UnknownConstant { action: String, constant: String, ty: String },
    InvalidInterval { action: String, start: i64, end: i64 },
    UnresolvedVariable { action: String, variable: String },
    MissingBinding { variable: String },
    UnknownBinding { label: String },
    BindingTypeMismatch { variable: String, ty: String },
    DuplicateLabel { label: String },
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::UnknownAction { action } => write!(f, "unknown action {action}"),
            PlanError::ArityMismatch { action, expected, got } => {
                write!(f, "action {action} takes {expected} parameters, plan supplies {got}")
            }
            PlanError::UnknownConstant { action, constant, ty } => {
                write!(f, "step {action}: {constant} is not a member of type {ty}")
            }
            PlanError::InvalidInterval { action, start, end } => {
                write!(f, "step {action}: invalid interval [{start}, {end}]")
            }
            PlanError::UnresolvedVariable { action, variable } => {
                write!(f, "step {action}: variable {variable} cannot be derived from the step")
            }
            PlanError::MissingBinding { variable } => {
                write!(f, "goal bindings missing a value for {variable}")
            }
            PlanError::UnknownBinding { label } => {
                write!(f, "goal bindings mention unknown variable {label}")
            }
            PlanError::BindingTypeMismatch { variable, ty } => {
                write!(f, "goal binding for {variable} does not fit type {ty}")
            }
            PlanError::DuplicateLabel { label } => {
                write!(f, "initial chronicle has two variables labelled {label}")
            }
        }
    }
}

impl core::error::Error for PlanError {}

struct GroundedChronicle<'a> {
    name: String,
    chronicle: &'a Chronicle,
    assignment: BTreeMap<VarId, i64>,
}

/// Validates a plan against the problem: grounds the initial chronicle plus
/// one chronicle per step, then checks every chronicle constraint, support
/// for every condition and coherence between all effects.
pub fn validate_plan(p: &Problem, plan: &Plan) -> Result<ValidationReport, PlanError> {
    let mut grounded: Vec<GroundedChronicle> = Vec::new();

    grounded.push(ground_initial(p, plan)?);
    for step in &plan.steps {
        let template = p
            .template(&step.action)
            .ok_or_else(|| PlanError::UnknownAction { action: step.action.clone() })?;
        grounded.push(ground_step(p, template, step)?);
    }

    let mut violations = Vec::new();

    // chronicle constraints, including the implicit interval orderings
    for g in &grounded {
        let assign = |v: VarId| g.assignment[&v];
        for x in &g.chronicle.constraints {
            if !x.eval(&assign, &|_| true) {
                violations.push(Violation::ConstraintViolation {
                    chronicle: g.name.clone(),
                    constraint: x.render(&|v| p.variables.get(v).label.clone()),
                });
            }
        }
        for (s, e, what) in g
            .chronicle
            .conditions
            .iter()
            .map(|c| (c.start, c.end, "condition"))
            .chain(g.chronicle.effects.iter().map(|e| (e.start, e.end, "effect")))
        {
            if assign(s) > assign(e) {
                violations.push(Violation::ConstraintViolation {
                    chronicle: g.name.clone(),
                    constraint: format!("{what} interval start exceeds its end"),
                });
            }
        }
    }

    // ground tokens and run the timeline checks
    let mut conditions = Vec::new();
    let mut effects = Vec::new();
    let mut cond_names = Vec::new();
    let mut eff_names = Vec::new();
    for g in &grounded {
        let assign = |v: VarId| g.assignment[&v];
        for c in &g.chronicle.conditions {
            conditions.push(GroundCondition {
                sv: ground_sv(&c.sv, &assign),
                value: assign(c.value),
                start: assign(c.start),
                end: assign(c.end),
            });
            cond_names.push(describe_token(p, &g.name, &c.sv, c.value, assign(c.start), assign(c.end), &assign, "="));
        }
        for e in &g.chronicle.effects {
            effects.push(GroundEffect {
                sv: ground_sv(&e.sv, &assign),
                value: assign(e.value),
                start: assign(e.start),
                end: assign(e.end),
            });
            eff_names.push(describe_token(p, &g.name, &e.sv, e.value, assign(e.start), assign(e.end), &assign, "<-"));
        }
    }

    for v in check_tokens(&conditions, &effects, false) {
        match v {
            GroundViolation::Overlap { effect_a, effect_b } => violations.push(Violation::CoherenceOverlap {
                effect_a: eff_names[effect_a].clone(),
                effect_b: eff_names[effect_b].clone(),
            }),
            GroundViolation::Unsupported { condition } => violations.push(Violation::UnsupportedCondition {
                condition: cond_names[condition].clone(),
            }),
        }
    }

    Ok(ValidationReport { violations })
}

fn ground_sv(sv: &StateVarRef, assign: &dyn Fn(VarId) -> i64) -> GroundSv {
    GroundSv { fluent: sv.fluent, args: sv.args.iter().map(|&a| assign(a)).collect() }
}

fn describe_token(
    p: &Problem,
    owner: &str,
    sv: &StateVarRef,
    value: VarId,
    start: i64,
    end: i64,
    assign: &dyn Fn(VarId) -> i64,
    sep: &str,
) -> String {
    let fluent = p.fluent(sv.fluent);
    let mut args = String::new();
    for (i, (&a, &ty)) in sv.args.iter().zip(&fluent.params).enumerate() {
        if i > 0 {
            args.push_str(", ");
        }
        args.push_str(&render_value(p, ty, assign(a)));
    }
    let v = render_value(p, fluent.value_type, assign(value));
    format!("[{start}, {end}] {}({args}) {sep} {v} ({owner})", fluent.name)
}

fn render_value(p: &Problem, ty: crate::model::TypeId, raw: i64) -> String {
    match p.type_def(ty).member_name(raw) {
        Some(n) => n.to_string(),
        None => raw.to_string(),
    }
}

/// Grounds the initial chronicle: bound variables keep their binding, free
/// variables take their value from the plan's goal bindings.
fn ground_initial<'a>(p: &'a Problem, plan: &Plan) -> Result<GroundedChronicle<'a>, PlanError> {
    let chronicle = &p.initial;
    let mut assignment = BTreeMap::new();
    let mut labels: BTreeMap<&str, VarId> = BTreeMap::new();

    for &v in &chronicle.vars {
        let var = p.variables.get(v);
        if let Some(b) = var.binding {
            assignment.insert(v, b);
            continue;
        }
        if labels.insert(var.label.as_str(), v).is_some() {
            return Err(PlanError::DuplicateLabel { label: var.label.clone() });
        }
    }

    for (label, value) in &plan.goal_bindings {
        let Some(&v) = labels.get(label.as_str()) else {
            return Err(PlanError::UnknownBinding { label: label.clone() });
        };
        let ty = p.var_type(v);
        let raw = match (value, &ty.kind) {
            (PlanValue::Object(name), TypeKind::Objects(_)) => {
                ty.ordinal_of(name).ok_or_else(|| PlanError::BindingTypeMismatch {
                    variable: label.clone(),
                    ty: ty.name.clone(),
                })?
            }
            (PlanValue::Int(i), TypeKind::IntRange(lo, hi)) if i >= lo && i <= hi => *i,
            (PlanValue::Int(i), TypeKind::Time) if *i >= 0 => *i,
            _ => {
                return Err(PlanError::BindingTypeMismatch {
                    variable: label.clone(),
                    ty: ty.name.clone(),
                })
            }
        };
        assignment.insert(v, raw);
    }

    for (&label, &v) in &labels {
        if !assignment.contains_key(&v) {
            return Err(PlanError::MissingBinding { variable: label.to_string() });
        }
    }

    Ok(GroundedChronicle { name: "initial".to_string(), chronicle, assignment })
}

/// Grounds one plan step against its template: parameters and start/end come
/// from the step, constants keep their binding, and any other timepoint must
/// be derivable through offset equalities (e.g. intermediate timepoints).
fn ground_step<'a>(
    p: &'a Problem,
    template: &'a ActionTemplate,
    step: &crate::plan::PlanStep,
) -> Result<GroundedChronicle<'a>, PlanError> {
    let name = format!("{}#{}", step.action, step.index);
    if step.params.len() != template.params.len() {
        return Err(PlanError::ArityMismatch {
            action: name,
            expected: template.params.len(),
            got: step.params.len(),
        });
    }
    if step.start < 0 || step.end < step.start {
        return Err(PlanError::InvalidInterval { action: name, start: step.start, end: step.end });
    }

    let mut assignment = BTreeMap::new();
    for (&param, given) in template.params.iter().zip(&step.params) {
        let ty = p.var_type(param);
        let raw = match &ty.kind {
            TypeKind::Objects(_) => ty.ordinal_of(given).ok_or_else(|| PlanError::UnknownConstant {
                action: name.clone(),
                constant: given.clone(),
                ty: ty.name.clone(),
            })?,
            TypeKind::IntRange(lo, hi) => {
                let parsed: i64 = given.parse().map_err(|_| PlanError::UnknownConstant {
                    action: name.clone(),
                    constant: given.clone(),
                    ty: ty.name.clone(),
                })?;
                if parsed < *lo || parsed > *hi {
                    return Err(PlanError::UnknownConstant {
                        action: name.clone(),
                        constant: given.clone(),
                        ty: ty.name.clone(),
                    });
                }
                parsed
            }
            TypeKind::Time => {
                return Err(PlanError::UnresolvedVariable {
                    action: name.clone(),
                    variable: p.variables.get(param).label.clone(),
                })
            }
        };
        assignment.insert(param, raw);
    }
    assignment.insert(template.start, step.start);
    assignment.insert(template.end, step.end);
    for &v in &template.chronicle.vars {
        if let Some(b) = p.variables.get(v).binding {
            assignment.insert(v, b);
        }
    }

    // derive remaining timepoints through offset equalities
    loop {
        let mut progressed = false;
        for x in &template.chronicle.constraints {
            let Constraint::Atom(a) = x else { continue };
            if a.op != CmpOp::Eq {
                continue;
            }
            match (a.lhs, a.rhs) {
                (Term::Var(l), Term::Var(r)) => {
                    match (assignment.get(&l).copied(), assignment.get(&r).copied()) {
                        (None, Some(rv)) => {
                            assignment.insert(l, rv + a.offset);
                            progressed = true;
                        }
                        (Some(lv), None) => {
                            assignment.insert(r, lv - a.offset);
                            progressed = true;
                        }
                        _ => {}
                    }
                }
                (Term::Var(l), Term::Lit(c)) => {
                    if !assignment.contains_key(&l) {
                        assignment.insert(l, c + a.offset);
                        progressed = true;
                    }
                }
                (Term::Lit(c), Term::Var(r)) => {
                    if !assignment.contains_key(&r) {
                        assignment.insert(r, c - a.offset);
                        progressed = true;
                    }
                }
                _ => {}
            }
        }
        if !progressed {
            break;
        }
    }

    for &v in &template.chronicle.vars {
        if !assignment.contains_key(&v) {
            return Err(PlanError::UnresolvedVariable {
                action: name,
                variable: p.variables.get(v).label.clone(),
            });
        }
    }

    Ok(GroundedChronicle { name, chronicle: &template.chronicle, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::truck_problem;
    use crate::plan::PlanStep;
    use alloc::vec;

    fn step(action: &str, params: &[&str], start: i64, end: i64) -> PlanStep {
        PlanStep {
            action: action.into(),
            index: 1,
            params: params.iter().map(|s| s.to_string()).collect(),
            start,
            end,
        }
    }

    fn goal(t: i64, l: &str) -> BTreeMap<String, PlanValue> {
        let mut m = BTreeMap::new();
        m.insert("t".to_string(), PlanValue::Int(t));
        m.insert("l".to_string(), PlanValue::Object(l.to_string()));
        m
    }

    #[test]
    fn worked_example_plan_is_valid() {
        let t = truck_problem();
        let plan = Plan {
            steps: vec![step("Go", &["R1", "L0", "L2"], 0, 10)],
            goal_bindings: goal(10, "L2"),
            depth: 1,
        };
        let report = validate_plan(&t.problem, &plan).unwrap();
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn empty_plan_leaves_goal_unsupported() {
        let t = truck_problem();
        let plan = Plan { steps: vec![], goal_bindings: goal(10, "L2"), depth: 0 };
        let report = validate_plan(&t.problem, &plan).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UnsupportedCondition { .. })));
    }

    #[test]
    fn overlapping_steps_violate_coherence() {
        let t = truck_problem();
        let plan = Plan {
            steps: vec![
                step("Go", &["R1", "L0", "L2"], 0, 10),
                PlanStep { index: 2, ..step("Go", &["R1", "L2", "L3"], 5, 15) },
            ],
            goal_bindings: goal(15, "L3"),
            depth: 2,
        };
        let report = validate_plan(&t.problem, &plan).unwrap();
        assert!(
            report.violations.iter().any(|v| matches!(v, Violation::CoherenceOverlap { .. })),
            "{report}"
        );
    }

    #[test]
    fn goal_constraints_are_checked() {
        let t = truck_problem();
        // L1 is reachable but the goal constraint requires L2 or L3
        let plan = Plan {
            steps: vec![step("Go", &["R1", "L0", "L1"], 0, 10)],
            goal_bindings: goal(10, "L1"),
            depth: 1,
        };
        let report = validate_plan(&t.problem, &plan).unwrap();
        assert!(
            report.violations.iter().any(|v| matches!(v, Violation::ConstraintViolation { .. })),
            "{report}"
        );
    }

    #[test]
    fn duration_constraint_is_checked() {
        let t = truck_problem();
        let plan = Plan {
            steps: vec![step("Go", &["R1", "L0", "L2"], 0, 7)],
            goal_bindings: goal(7, "L2"),
            depth: 1,
        };
        let report = validate_plan(&t.problem, &plan).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ConstraintViolation { .. })));
    }

    #[test]
    fn ill_typed_step_is_rejected() {
        let t = truck_problem();
        let plan = Plan {
            steps: vec![step("Go", &["L0", "L0", "L2"], 0, 10)],
            goal_bindings: goal(10, "L2"),
            depth: 1,
        };
        assert!(matches!(
            validate_plan(&t.problem, &plan),
            Err(PlanError::UnknownConstant { .. })
        ));

        let plan = Plan {
            steps: vec![step("Teleport", &["R1"], 0, 10)],
            goal_bindings: goal(10, "L2"),
            depth: 1,
        };
        assert!(matches!(validate_plan(&t.problem, &plan), Err(PlanError::UnknownAction { .. })));
    }

    #[test]
    fn missing_goal_binding_is_rejected() {
        let t = truck_problem();
        let plan = Plan {
            steps: vec![step("Go", &["R1", "L0", "L2"], 0, 10)],
            goal_bindings: BTreeMap::new(),
            depth: 1,
        };
        assert!(matches!(validate_plan(&t.problem, &plan), Err(PlanError::MissingBinding { .. })));
    }

    #[test]
    fn verdict_is_order_independent() {
        let t = truck_problem();
        let s1 = step("Go", &["R1", "L0", "L2"], 0, 10);
        let s2 = PlanStep { index: 2, ..step("Go", &["R1", "L2", "L3"], 12, 22) };
        let fwd = Plan {
            steps: vec![s1.clone(), s2.clone()],
            goal_bindings: goal(22, "L3"),
            depth: 2,
        };
        let rev = Plan { steps: vec![s2, s1], goal_bindings: goal(22, "L3"), depth: 2 };
        let a = validate_plan(&t.problem, &fwd).unwrap();
        let b = validate_plan(&t.problem, &rev).unwrap();
        assert_eq!(a.is_valid(), b.is_valid());
        assert!(a.is_valid(), "{a}");
    }
}
