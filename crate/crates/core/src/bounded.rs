//! Bounded planning problems: the initial chronicle plus `k` optional
//! instances of every action template, each guarded by a presence variable,
//! and the condition/effect tokens extracted from them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{
    instantiate_unchecked, Chronicle, ChronicleId, ChronicleOrigin, Problem, StateVarRef, VarId,
    VarOrigin, VarTable, TIME_TYPE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresenceKind {
    /// The initial chronicle is always part of the solution.
    ConstantTrue,
    /// Optional action chronicle; the solver decides.
    Decision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresenceVar {
    pub chronicle: ChronicleId,
    pub kind: PresenceKind,
    pub name: String,
}

/// `present(C): [start, end] sv = value`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionToken {
    pub owner: ChronicleId,
    pub start: VarId,
    pub end: VarId,
    pub sv: StateVarRef,
    pub value: VarId,
}

/// `present(C): [start, end, persist] sv <- value`: the value holds over
/// `[end, persist]`, where `persist` is a fresh timepoint bounded below by
/// `end` and otherwise stretched as far as support requires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectToken {
    pub owner: ChronicleId,
    pub start: VarId,
    pub end: VarId,
    pub persist: VarId,
    pub sv: StateVarRef,
    pub value: VarId,
}

/// The bounded problem at some depth `k`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedProblem {
    pub depth: u32,
    /// The problem's variables extended with instance and persistence variables.
    pub variables: VarTable,
    /// Chronicle 0 is the initial one; instances follow in template order,
    /// then index order.
    pub chronicles: Vec<Chronicle>,
    pub presence: Vec<PresenceVar>,
    /// Instance parameter variables, aligned with `chronicles` (empty for the
    /// initial chronicle).
    pub params: Vec<Vec<VarId>>,
    /// Instance end timepoints, aligned with `chronicles`.
    pub ends: Vec<Option<VarId>>,
    /// Per template (problem order), the ordered instance list C_a^1..C_a^k.
    pub template_instances: Vec<Vec<ChronicleId>>,
    condition_tokens: Vec<ConditionToken>,
    effect_tokens: Vec<EffectToken>,
}

impl BoundedProblem {
    pub const INITIAL: ChronicleId = ChronicleId(0);

    /// One token per condition, in chronicle order then declaration order.
    pub fn condition_tokens(&self) -> &[ConditionToken] {
        &self.condition_tokens
    }

    /// One token per effect, each with its fresh persistence timepoint, in
    /// chronicle order then declaration order.
    pub fn effect_tokens(&self) -> &[EffectToken] {
        &self.effect_tokens
    }

    pub fn chronicle(&self, id: ChronicleId) -> &Chronicle {
        &self.chronicles[id.0 as usize]
    }

    pub fn presence_of(&self, id: ChronicleId) -> &PresenceVar {
        &self.presence[id.0 as usize]
    }

    pub fn is_constant_present(&self, id: ChronicleId) -> bool {
        self.presence_of(id).kind == PresenceKind::ConstantTrue
    }

    pub fn chronicle_name(&self, id: ChronicleId) -> String {
        self.chronicle(id).origin.name()
    }

    /// Effect tokens owned by one chronicle.
    pub fn effect_tokens_of(&self, id: ChronicleId) -> impl Iterator<Item = &EffectToken> {
        self.effect_tokens.iter().filter(move |t| t.owner == id)
    }
}

/// Builds the bounded problem of depth `k`: the initial chronicle plus `k`
/// fresh instances of every template, each with a fresh boolean presence
/// variable, plus one persistence timepoint per effect.
///
/// The problem is expected to be well-formed (see
/// [`crate::model::validate_problem`]); instantiation itself never fails.
pub fn gen_problem(p: &Problem, k: u32) -> BoundedProblem {
    let mut variables = p.variables.clone();
    let mut chronicles = vec![p.initial.clone()];
    let mut presence = vec![PresenceVar {
        chronicle: BoundedProblem::INITIAL,
        kind: PresenceKind::ConstantTrue,
        name: "o_initial".to_string(),
    }];
    let mut params = vec![Vec::new()];
    let mut ends = vec![None];
    let mut template_instances = Vec::with_capacity(p.templates.len());

    for template in &p.templates {
        let mut instances = Vec::with_capacity(k as usize);
        for index in 1..=k {
            let id = ChronicleId(chronicles.len() as u32);
            let (chronicle, map) = instantiate_unchecked(template, index, &mut variables);
            chronicles.push(chronicle);
            presence.push(PresenceVar {
                chronicle: id,
                kind: PresenceKind::Decision,
                name: format!("o_{}_{}", template.name, index),
            });
            params.push(template.params.iter().map(|v| map[v]).collect());
            ends.push(Some(map[&template.end]));
            instances.push(id);
        }
        template_instances.push(instances);
    }

    let mut condition_tokens = Vec::new();
    let mut effect_tokens = Vec::new();
    for (ci, chronicle) in chronicles.iter().enumerate() {
        let owner = ChronicleId(ci as u32);
        for cond in &chronicle.conditions {
            condition_tokens.push(ConditionToken {
                owner,
                start: cond.start,
                end: cond.end,
                sv: cond.sv.clone(),
                value: cond.value,
            });
        }
    }
    for (ci, chronicle) in chronicles.iter().enumerate() {
        let owner = ChronicleId(ci as u32);
        for eff in &chronicle.effects {
            let persist = variables.fresh(
                TIME_TYPE,
                format!("tp{}", effect_tokens.len()),
                VarOrigin::Persistence,
                None,
            );
            effect_tokens.push(EffectToken {
                owner,
                start: eff.start,
                end: eff.end,
                persist,
                sv: eff.sv.clone(),
                value: eff.value,
            });
        }
    }

    BoundedProblem {
        depth: k,
        variables,
        chronicles,
        presence,
        params,
        ends,
        template_instances,
        condition_tokens,
        effect_tokens,
    }
}

/// Builds a plan from a total valuation of a bounded problem: the steps are
/// the present action chronicles with decoded parameters, sorted by start
/// time, and the goal bindings are the values of the initial chronicle's
/// unbound variables.
pub fn build_plan(
    p: &Problem,
    pi: &BoundedProblem,
    present: &dyn Fn(ChronicleId) -> bool,
    value: &dyn Fn(VarId) -> i64,
) -> Result<crate::plan::Plan, PlanBuildError> {
    use crate::plan::{Plan, PlanStep, PlanValue};

    let decode = |v: VarId| -> i64 {
        match pi.variables.get(v).binding {
            Some(b) => b,
            None => value(v),
        }
    };

    let mut steps = Vec::new();
    for (ci, chronicle) in pi.chronicles.iter().enumerate() {
        let id = ChronicleId(ci as u32);
        let ChronicleOrigin::Instance { template, index } = &chronicle.origin else {
            continue;
        };
        if !present(id) {
            continue;
        }
        let mut rendered = Vec::new();
        for &param in &pi.params[ci] {
            let var = pi.variables.get(param);
            let ty = p.type_def(var.ty);
            let ord = decode(param);
            let name = match ty.member_name(ord) {
                Some(n) => n.to_string(),
                None if !ty.is_object() => ord.to_string(),
                None => {
                    return Err(PlanBuildError {
                        variable: var.label.clone(),
                        value: ord,
                        ty: ty.name.clone(),
                    })
                }
            };
            rendered.push(name);
        }
        let start = decode(chronicle.start.expect("action chronicle without start"));
        let end = decode(pi.ends[ci].expect("action chronicle without end"));
        steps.push(PlanStep {
            action: template.clone(),
            index: *index,
            params: rendered,
            start,
            end,
        });
    }
    steps.sort_by(|a, b| {
        (a.start, &a.action, a.index).cmp(&(b.start, &b.action, b.index))
    });

    let mut goal_bindings = alloc::collections::BTreeMap::new();
    for &v in &pi.chronicles[0].vars {
        let var = pi.variables.get(v);
        if var.binding.is_some() {
            continue;
        }
        let ty = p.type_def(var.ty);
        let raw = value(v);
        let rendered = if ty.is_object() {
            match ty.member_name(raw) {
                Some(n) => PlanValue::Object(n.to_string()),
                None => {
                    return Err(PlanBuildError {
                        variable: var.label.clone(),
                        value: raw,
                        ty: ty.name.clone(),
                    })
                }
            }
        } else {
            PlanValue::Int(raw)
        };
        goal_bindings.insert(var.label.clone(), rendered);
    }

    Ok(Plan { steps, goal_bindings, depth: pi.depth })
}

/// A valuation assigned a value outside the variable's domain; signals a
/// mismatch between the encoder and the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanBuildError {
    pub variable: String,
    pub value: i64,
    pub ty: String,
}

impl core::fmt::Display for PlanBuildError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "variable {} was assigned {} which is outside its domain ({})",
            self.variable, self.value, self.ty
        )
    }
}

impl core::error::Error for PlanBuildError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::truck_problem;

    #[test]
    fn depth_zero_is_initial_only() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 0);
        assert_eq!(pi.chronicles.len(), 1);
        assert_eq!(pi.presence.len(), 1);
        assert_eq!(pi.presence[0].kind, PresenceKind::ConstantTrue);
        assert!(pi.template_instances[0].is_empty());
    }

    #[test]
    fn depth_two_truck() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 2);
        assert_eq!(pi.chronicles.len(), 3);
        assert_eq!(pi.presence[1].name, "o_Go_1");
        assert_eq!(pi.presence[2].name, "o_Go_2");
        assert_eq!(pi.template_instances, vec![vec![ChronicleId(1), ChronicleId(2)]]);
        // tokens: conditions = goal + 2 x Go, effects = init + 2 x Go
        assert_eq!(pi.condition_tokens().len(), 3);
        assert_eq!(pi.effect_tokens().len(), 3);
    }

    #[test]
    fn depth_one_token_sets_match_worked_example() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 1);
        assert_eq!(pi.condition_tokens().len(), 2);
        assert_eq!(pi.effect_tokens().len(), 2);
        // persistence timepoints are fresh and pairwise distinct
        let mut persists: Vec<_> = pi.effect_tokens().iter().map(|t| t.persist).collect();
        let chronicle_vars: alloc::collections::BTreeSet<_> =
            pi.chronicles.iter().flat_map(|c| c.vars.iter().copied()).collect();
        persists.sort();
        persists.dedup();
        assert_eq!(persists.len(), pi.effect_tokens().len());
        assert!(persists.iter().all(|p| !chronicle_vars.contains(p)));
    }

    #[test]
    fn token_counts_scale_linearly_in_k() {
        let t = truck_problem();
        let base_c = t.problem.initial.conditions.len();
        let base_e = t.problem.initial.effects.len();
        let per_c: usize = t.problem.templates.iter().map(|a| a.chronicle.conditions.len()).sum();
        let per_e: usize = t.problem.templates.iter().map(|a| a.chronicle.effects.len()).sum();
        for k in 0..5 {
            let pi = gen_problem(&t.problem, k);
            assert_eq!(pi.condition_tokens().len(), base_c + k as usize * per_c);
            assert_eq!(pi.effect_tokens().len(), base_e + k as usize * per_e);
        }
    }

    #[test]
    fn deeper_problems_contain_shallower_ones() {
        let t = truck_problem();
        let p2 = gen_problem(&t.problem, 2);
        let p3 = gen_problem(&t.problem, 3);
        for (ci, c) in p2.chronicles.iter().enumerate() {
            assert!(
                p3.chronicles.iter().any(|d| d.origin == c.origin),
                "chronicle {} of depth 2 missing at depth 3",
                ci
            );
        }
    }
}
