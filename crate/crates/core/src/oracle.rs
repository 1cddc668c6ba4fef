//! Ground-truth satisfiability for tiny bounded problems by exhaustive
//! enumeration: presence booleans, parameter ordinals and timepoints over a
//! finite horizon, with effect persistence reconstructed the same way the
//! plan validator does. Intended for cross-checking the encoder and solver
//! pipeline, not for planning.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::bounded::{build_plan, gen_problem, BoundedProblem};
use crate::constraint::{CmpOp, Constraint, Term};
use crate::ground::{check_tokens, GroundCondition, GroundEffect, GroundSv};
use crate::model::{ChronicleId, Problem, TypeKind, VarId};
use crate::plan::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Every timepoint is enumerated over `[0, horizon]`.
    pub horizon: i64,
    /// Upper bound on assignment attempts before giving up.
    pub node_budget: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { horizon: 15, node_budget: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    /// Satisfiable, with a witness plan that passes the validator's checks.
    Sat(Plan),
    /// No assignment within the horizon satisfies the bounded problem.
    Unsat,
    /// The assignment space exceeded the configured budget.
    BlownBudget,
}

/// Upper bound on the number of assignments `brute_force_sat` may visit, by
/// combo; lets callers keep generated instances inside the budget.
pub fn enumeration_size(p: &Problem, k: u32, cfg: &OracleConfig) -> u128 {
    let pi = gen_problem(p, k);
    let n_opt = pi.chronicles.len() - 1;
    let mut total: u128 = 0;
    for combo in 0..(1u64 << n_opt) {
        let present = |c: ChronicleId| c.0 == 0 || (combo >> (c.0 - 1)) & 1 == 1;
        let space = Enumeration::build(p, &pi, &present, cfg);
        let mut product: u128 = 1;
        for d in &space.domains {
            product = product.saturating_mul((d.1 - d.0 + 1) as u128);
        }
        total = total.saturating_add(product);
    }
    total
}

/// Decides satisfiability of the depth-`k` bounded problem by exhaustive
/// enumeration within the horizon. Agrees with the plan validator by
/// construction (both run the same ground-token checks).
pub fn brute_force_sat(p: &Problem, k: u32, cfg: &OracleConfig) -> OracleOutcome {
    let pi = gen_problem(p, k);
    let n_opt = pi.chronicles.len() - 1;
    let mut budget = cfg.node_budget;

    for combo in 0..(1u64 << n_opt) {
        let present = |c: ChronicleId| c.0 == 0 || (combo >> (c.0 - 1)) & 1 == 1;
        let mut space = Enumeration::build(p, &pi, &present, cfg);
        match space.search(&mut budget) {
            SearchResult::Found => {
                let plan = build_plan(p, &pi, &present, &|v| space.values[v.0 as usize])
                    .expect("oracle witness decodes");
                return OracleOutcome::Sat(plan);
            }
            SearchResult::Exhausted => {}
            SearchResult::OutOfBudget => return OracleOutcome::BlownBudget,
        }
    }
    OracleOutcome::Unsat
}

enum SearchResult {
    Found,
    Exhausted,
    OutOfBudget,
}

/// One presence combo's search space: the variables to enumerate, derived
/// variables, triggered constraints and the ground-token skeleton.
struct Enumeration<'a> {
    p: &'a Problem,
    pi: &'a BoundedProblem,
    horizon: i64,
    /// Variables to enumerate, in order, with inclusive domains.
    order: Vec<VarId>,
    domains: Vec<(i64, i64)>,
    /// position in `order` -> constraints to check once it is assigned
    checks: Vec<Vec<&'a Constraint>>,
    /// checks whose variables are all pre-bound
    immediate: Vec<&'a Constraint>,
    /// derived[base] = (var, offset) computed as soon as base is known
    derived: BTreeMap<VarId, Vec<(VarId, i64)>>,
    values: Vec<i64>,
    assigned: Vec<bool>,
    /// token skeletons for the present chronicles
    conditions: Vec<(ChronicleId, &'a crate::model::Condition)>,
    effects: Vec<(ChronicleId, &'a crate::model::Effect)>,
}

impl<'a> Enumeration<'a> {
    fn build(
        p: &'a Problem,
        pi: &'a BoundedProblem,
        present: &dyn Fn(ChronicleId) -> bool,
        cfg: &OracleConfig,
    ) -> Self {
        let n = pi.variables.len();
        let mut values = alloc::vec![0i64; n];
        let mut assigned = alloc::vec![false; n];
        for var in pi.variables.iter() {
            if let Some(b) = var.binding {
                values[var.id.0 as usize] = b;
                assigned[var.id.0 as usize] = true;
            }
        }

        let active: Vec<ChronicleId> = (0..pi.chronicles.len() as u32)
            .map(ChronicleId)
            .filter(|&c| present(c))
            .collect();

        // derive variables pinned by an offset equality to another variable,
        // in dependency order, so their domains are not enumerated
        let mut derived: BTreeMap<VarId, Vec<(VarId, i64)>> = BTreeMap::new();
        let mut derived_from: BTreeMap<VarId, VarId> = BTreeMap::new();
        for &c in &active {
            for x in &pi.chronicle(c).constraints {
                let Constraint::Atom(a) = x else { continue };
                if a.op != CmpOp::Eq {
                    continue;
                }
                let (Term::Var(l), Term::Var(r)) = (a.lhs, a.rhs) else { continue };
                let unassigned = |v: VarId| !assigned[v.0 as usize];
                let free = |v: VarId| unassigned(v) && !derived_from.contains_key(&v);
                // l = r + offset
                let (target, base, offset) = if free(l) && l != r {
                    (l, r, a.offset)
                } else if free(r) && l != r {
                    (r, l, -a.offset)
                } else {
                    continue;
                };
                // refuse cycles through the derivation chain
                let mut root = base;
                let mut cyclic = false;
                while let Some(&b) = derived_from.get(&root) {
                    if b == target {
                        cyclic = true;
                        break;
                    }
                    root = b;
                }
                if cyclic || root == target {
                    continue;
                }
                derived_from.insert(target, base);
                derived.entry(base).or_default().push((target, offset));
            }
        }

        let mut order = Vec::new();
        let mut domains = Vec::new();
        let enumerate = |v: VarId, order: &mut Vec<VarId>, domains: &mut Vec<(i64, i64)>| {
            if assigned[v.0 as usize] || derived_from.contains_key(&v) {
                return;
            }
            let ty = p.type_def(pi.variables.get(v).ty);
            let dom = match &ty.kind {
                TypeKind::Objects(members) => (0, members.len() as i64 - 1),
                TypeKind::IntRange(lo, hi) => (*lo, *hi),
                TypeKind::Time => (0, cfg.horizon),
            };
            order.push(v);
            domains.push(dom);
        };
        for &c in &active {
            for &v in &pi.chronicle(c).vars {
                enumerate(v, &mut order, &mut domains);
            }
        }

        // constraints fire as soon as their last variable is placed
        let position: BTreeMap<VarId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let root_position = |v: VarId| -> Option<usize> {
            let mut cur = v;
            loop {
                if assigned[cur.0 as usize] {
                    return None;
                }
                if let Some(pos) = position.get(&cur) {
                    return Some(*pos);
                }
                cur = *derived_from.get(&cur).expect("variable neither bound, enumerated nor derived");
            }
        };
        let mut checks: Vec<Vec<&Constraint>> = alloc::vec![Vec::new(); order.len()];
        let mut immediate = Vec::new();
        for &c in &active {
            for x in &pi.chronicle(c).constraints {
                let mut vars = Vec::new();
                x.collect_vars(&mut vars);
                let trigger = vars.iter().filter_map(|&v| root_position(v)).max();
                match trigger {
                    Some(pos) => checks[pos].push(x),
                    None => immediate.push(x),
                }
            }
        }

        let mut conditions = Vec::new();
        let mut effects = Vec::new();
        for &c in &active {
            for cond in &pi.chronicle(c).conditions {
                conditions.push((c, cond));
            }
            for eff in &pi.chronicle(c).effects {
                effects.push((c, eff));
            }
        }

        Enumeration {
            p,
            pi,
            horizon: cfg.horizon,
            order,
            domains,
            checks,
            immediate,
            derived,
            values,
            assigned,
            conditions,
            effects,
        }
    }

    fn search(&mut self, budget: &mut u64) -> SearchResult {
        // validate interval orderings statically impossible under bound vars
        let eval_now = |x: &Constraint, values: &[i64]| -> bool {
            x.eval(&|v| values[v.0 as usize], &|_| true)
        };
        for x in &self.immediate {
            if *budget == 0 {
                return SearchResult::OutOfBudget;
            }
            *budget -= 1;
            if !eval_now(x, &self.values) {
                return SearchResult::Exhausted;
            }
        }
        if self.order.is_empty() {
            return if self.leaf_consistent() { SearchResult::Found } else { SearchResult::Exhausted };
        }
        self.descend(0, budget)
    }

    fn descend(&mut self, depth: usize, budget: &mut u64) -> SearchResult {
        let v = self.order[depth];
        let (lo, hi) = self.domains[depth];
        for value in lo..=hi {
            if *budget == 0 {
                return SearchResult::OutOfBudget;
            }
            *budget -= 1;

            if !self.place(v, value) {
                self.retract(v);
                continue;
            }
            let ok = self.checks[depth]
                .iter()
                .all(|x| x.eval(&|v| self.values[v.0 as usize], &|_| true));
            if ok {
                if depth + 1 == self.order.len() {
                    if self.leaf_consistent() {
                        return SearchResult::Found;
                    }
                } else {
                    match self.descend(depth + 1, budget) {
                        SearchResult::Exhausted => {}
                        other => return other,
                    }
                }
            }
            self.retract(v);
        }
        SearchResult::Exhausted
    }

    /// Assigns `v` and propagates derived variables; false when a derived
    /// value escapes its domain.
    fn place(&mut self, v: VarId, value: i64) -> bool {
        self.values[v.0 as usize] = value;
        self.assigned[v.0 as usize] = true;
        let Some(children) = self.derived.get(&v) else { return true };
        let children = children.clone();
        for (child, offset) in children {
            let cv = value + offset;
            let ty = self.p.type_def(self.pi.variables.get(child).ty);
            let (lo, hi) = ty.bounds();
            // derived timepoints stand in for enumerated ones, so they obey
            // the same horizon clamp
            let hi = match ty.kind {
                TypeKind::Time => self.horizon,
                _ => hi.unwrap_or(i64::MAX),
            };
            if cv < lo || cv > hi {
                return false;
            }
            if !self.place(child, cv) {
                return false;
            }
        }
        true
    }

    fn retract(&mut self, v: VarId) {
        self.assigned[v.0 as usize] = false;
        if let Some(children) = self.derived.get(&v) {
            let children = children.clone();
            for (child, _) in children {
                self.retract(child);
            }
        }
    }

    fn leaf_consistent(&self) -> bool {
        let assign = |v: VarId| self.values[v.0 as usize];
        let mut conds = Vec::with_capacity(self.conditions.len());
        for (_, c) in &self.conditions {
            if assign(c.start) > assign(c.end) {
                return false;
            }
            conds.push(GroundCondition {
                sv: GroundSv { fluent: c.sv.fluent, args: c.sv.args.iter().map(|&a| assign(a)).collect() },
                value: assign(c.value),
                start: assign(c.start),
                end: assign(c.end),
            });
        }
        let mut effs = Vec::with_capacity(self.effects.len());
        for (_, e) in &self.effects {
            if assign(e.start) > assign(e.end) {
                return false;
            }
            effs.push(GroundEffect {
                sv: GroundSv { fluent: e.sv.fluent, args: e.sv.args.iter().map(|&a| assign(a)).collect() },
                value: assign(e.value),
                start: assign(e.start),
                end: assign(e.end),
            });
        }
        check_tokens(&conds, &effs, true).is_empty()
    }
}
