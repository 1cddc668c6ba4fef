//! Compilation of a bounded planning problem into a CSP over booleans and
//! integers: coherence constraints between effect tokens, support constraints
//! for condition tokens, internal chronicle consistency, symmetry breaking
//! over same-template instances, and per-variable domain bounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bounded::{BoundedProblem, ConditionToken, EffectToken};
use crate::constraint::{CmpOp, Constraint, Term};
use crate::model::{ChronicleId, ChronicleOrigin, Problem, TypeKind, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Emit the two symmetry-breaking constraint families.
    pub symmetry: bool,
    /// Omit statically true assertions (pairs on distinct fluents and other
    /// constant-folded tautologies). Disabling keeps one assertion per token
    /// pair so that assertion counts follow the raw quadratic law.
    pub prune_static: bool,
    /// Clamp every timepoint to `[0, horizon]`; used when comparing against
    /// the bounded-horizon oracle.
    pub horizon: Option<i64>,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { symmetry: true, prune_static: true, horizon: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedVar {
    pub name: String,
    pub sort: Sort,
    pub lower: Option<i64>,
    pub upper: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintTag {
    Domain,
    Consistency,
    Coherence,
    Support,
    Symmetry,
}

impl ConstraintTag {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintTag::Domain => "domain",
            ConstraintTag::Consistency => "consistency",
            ConstraintTag::Coherence => "coherence",
            ConstraintTag::Support => "support",
            ConstraintTag::Symmetry => "symmetry",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub constraint: Constraint,
    pub tag: ConstraintTag,
    /// Which tokens/chronicles produced the assertion (for the script comments).
    pub source: String,
}

/// The compiled CSP: sorted variable declarations plus tagged assertions.
/// Bound variables are inlined as literals and never declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub vars: Vec<SortedVar>,
    pub assertions: Vec<Assertion>,
    var_names: BTreeMap<VarId, String>,
    presence_names: Vec<Option<String>>,
}

impl Formula {
    /// SMT name of an unbound variable.
    pub fn var_name(&self, v: VarId) -> Option<&str> {
        self.var_names.get(&v).map(|s| s.as_str())
    }

    /// SMT name of a chronicle's presence variable; `None` when constant true.
    pub fn presence_name(&self, c: ChronicleId) -> Option<&str> {
        self.presence_names.get(c.0 as usize).and_then(|n| n.as_deref())
    }

    pub fn count(&self, tag: ConstraintTag) -> usize {
        self.assertions.iter().filter(|a| a.tag == tag).count()
    }

    pub fn stats(&self) -> EncodingStats {
        EncodingStats {
            variables: self.vars.len(),
            assertions: self.assertions.len(),
            coherence: self.count(ConstraintTag::Coherence),
            support: self.count(ConstraintTag::Support),
            consistency: self.count(ConstraintTag::Consistency),
            symmetry: self.count(ConstraintTag::Symmetry),
            domain: self.count(ConstraintTag::Domain),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingStats {
    pub variables: usize,
    pub assertions: usize,
    pub coherence: usize,
    pub support: usize,
    pub consistency: usize,
    pub symmetry: usize,
    pub domain: usize,
}

fn normalize(pi: &BoundedProblem, c: &Constraint) -> Constraint {
    c.normalize(
        &|v| pi.variables.get(v).binding,
        &|ch| if pi.is_constant_present(ch) { Some(true) } else { None },
    )
}

fn present(c: ChronicleId) -> Constraint {
    Constraint::Present(c)
}

/// Two present effect tokens may not concurrently impose a value on the same
/// state variable: `o ^ o' => t <= s' v t' <= s v p1 != p1' v .. v pn != pn'`.
/// Tokens on distinct fluents can never denote the same state variable, so
/// the constraint is constant true for them.
pub fn coherent(pi: &BoundedProblem, a: &EffectToken, b: &EffectToken) -> Constraint {
    if a.sv.fluent != b.sv.fluent {
        return Constraint::True;
    }
    let guard = Constraint::and(vec![present(a.owner), present(b.owner)]);
    let mut disjuncts = vec![
        Constraint::le_vars(a.persist, b.start),
        Constraint::le_vars(b.persist, a.start),
    ];
    for (&pa, &pb) in a.sv.args.iter().zip(&b.sv.args) {
        disjuncts.push(Constraint::ne_vars(pa, pb));
    }
    normalize(pi, &Constraint::implies(guard, Constraint::or(disjuncts)))
}

/// An effect token establishes the value a condition token requires and that
/// value persists through the condition's interval:
/// `o' ^ e' <= s ^ e <= t' ^ p1 = p1' ^ .. ^ pn = pn' ^ v = v'`.
/// Constant false when the fluents differ.
pub fn supported_by(pi: &BoundedProblem, cond: &ConditionToken, eff: &EffectToken) -> Constraint {
    if cond.sv.fluent != eff.sv.fluent {
        return Constraint::False;
    }
    let mut conjuncts = vec![
        present(eff.owner),
        Constraint::le_vars(eff.end, cond.start),
        Constraint::le_vars(cond.end, eff.persist),
    ];
    for (&pc, &pe) in cond.sv.args.iter().zip(&eff.sv.args) {
        conjuncts.push(Constraint::eq_vars(pc, pe));
    }
    conjuncts.push(Constraint::eq_vars(cond.value, eff.value));
    normalize(pi, &Constraint::and(conjuncts))
}

/// A present condition token must be supported by at least one effect token.
/// Statically impossible supporters are dropped; a condition with no
/// candidate supporter left encodes as `present => false`.
pub fn supported(pi: &BoundedProblem, cond: &ConditionToken) -> Constraint {
    let disjuncts: Vec<Constraint> = pi
        .effect_tokens()
        .iter()
        .map(|eff| supported_by(pi, cond, eff))
        .filter(|c| *c != Constraint::False)
        .collect();
    if disjuncts.is_empty() {
        return normalize(pi, &Constraint::implies(present(cond.owner), Constraint::False));
    }
    normalize(pi, &Constraint::implies(present(cond.owner), Constraint::or(disjuncts)))
}

/// If a chronicle is part of the solution all its constraints must hold,
/// including the implicit interval orderings `s <= e` and the persistence
/// lower bounds `e <= t` of its effect tokens.
pub fn consistent(pi: &BoundedProblem, id: ChronicleId) -> Constraint {
    let chronicle = pi.chronicle(id);
    let mut parts = chronicle.constraints.clone();
    for cond in &chronicle.conditions {
        parts.push(Constraint::le_vars(cond.start, cond.end));
    }
    for eff in &chronicle.effects {
        parts.push(Constraint::le_vars(eff.start, eff.end));
    }
    for token in pi.effect_tokens_of(id) {
        parts.push(Constraint::le_vars(token.end, token.persist));
    }
    normalize(pi, &Constraint::implies(present(id), Constraint::and(parts)))
}

/// Same-template instances are interchangeable; break the symmetry by
/// requiring presence to be prefix-closed over the instance ordering and
/// start times to follow it.
pub fn symmetry_constraints(pi: &BoundedProblem) -> Vec<(Constraint, String)> {
    let mut out = Vec::new();
    for instances in &pi.template_instances {
        for pair in instances.windows(2) {
            let (first, second) = (pair[0], pair[1]);
            let name = pi.chronicle_name(second);
            out.push((
                normalize(pi, &Constraint::implies(present(second), present(first))),
                format!("presence-chain {name}"),
            ));
            let s1 = pi.chronicle(first).start.expect("instance without start");
            let s2 = pi.chronicle(second).start.expect("instance without start");
            out.push((
                normalize(pi, &Constraint::le_vars(s1, s2)),
                format!("start-order {name}"),
            ));
        }
    }
    out
}

/// Compiles the bounded problem into a [`Formula`]: declarations for every
/// unbound chronicle variable, persistence timepoint and presence decision,
/// then domain, consistency, coherence, support and symmetry assertions.
pub fn encode(p: &Problem, pi: &BoundedProblem, opts: &EncodeOptions) -> Formula {
    let mut used = BTreeSet::new();
    let mut claim = |wanted: String, salt: u32| -> String {
        let name = sanitize(&wanted);
        let name = if used.contains(&name) { format!("{name}_x{salt}") } else { name };
        used.insert(name.clone());
        name
    };

    // presence declarations, chronicle order
    let mut presence_names = Vec::with_capacity(pi.chronicles.len());
    let mut vars = Vec::new();
    for pv in &pi.presence {
        if pi.is_constant_present(pv.chronicle) {
            presence_names.push(None);
        } else {
            let name = claim(pv.name.clone(), pv.chronicle.0);
            vars.push(SortedVar { name: name.clone(), sort: Sort::Bool, lower: None, upper: None });
            presence_names.push(Some(name));
        }
    }

    // chronicle variables (unbound only), chronicle order then declaration
    // order, then persistence timepoints in token order
    let mut var_names = BTreeMap::new();
    let mut declared_ints: Vec<VarId> = Vec::new();
    for chronicle in &pi.chronicles {
        for &v in &chronicle.vars {
            let var = pi.variables.get(v);
            if var.binding.is_some() {
                continue;
            }
            let wanted = match &chronicle.origin {
                ChronicleOrigin::Initial => var.label.clone(),
                ChronicleOrigin::Template(t) | ChronicleOrigin::Instance { template: t, .. } => {
                    format!("{t}_{}", var.label)
                }
            };
            let name = claim(wanted, v.0);
            let (lower, upper) = domain_bounds(p, pi, v, opts);
            vars.push(SortedVar { name: name.clone(), sort: Sort::Int, lower, upper });
            var_names.insert(v, name);
            declared_ints.push(v);
        }
    }
    for token in pi.effect_tokens() {
        let v = token.persist;
        let name = claim(pi.variables.get(v).label.clone(), v.0);
        let (lower, upper) = domain_bounds(p, pi, v, opts);
        vars.push(SortedVar { name: name.clone(), sort: Sort::Int, lower, upper });
        var_names.insert(v, name);
        declared_ints.push(v);
    }

    let mut assertions = Vec::new();

    // domain bounds, declaration order; unconditional so that any model
    // assigns every declared variable inside its domain
    for &v in &declared_ints {
        let (lower, upper) = domain_bounds(p, pi, v, opts);
        let mut parts = Vec::new();
        if let Some(lo) = lower {
            parts.push(Constraint::atom(Term::Lit(lo), CmpOp::Le, Term::Var(v), 0));
        }
        if let Some(hi) = upper {
            parts.push(Constraint::atom(Term::Var(v), CmpOp::Le, Term::Lit(hi), 0));
        }
        if parts.is_empty() {
            continue;
        }
        assertions.push(Assertion {
            constraint: Constraint::and(parts),
            tag: ConstraintTag::Domain,
            source: var_names[&v].clone(),
        });
    }

    for (ci, _) in pi.chronicles.iter().enumerate() {
        let id = ChronicleId(ci as u32);
        let c = consistent(pi, id);
        if c == Constraint::True && opts.prune_static {
            continue;
        }
        assertions.push(Assertion {
            constraint: c,
            tag: ConstraintTag::Consistency,
            source: pi.chronicle_name(id),
        });
    }

    let effects = pi.effect_tokens();
    for i in 0..effects.len() {
        for j in (i + 1)..effects.len() {
            let c = coherent(pi, &effects[i], &effects[j]);
            if c == Constraint::True && opts.prune_static {
                continue;
            }
            assertions.push(Assertion {
                constraint: c,
                tag: ConstraintTag::Coherence,
                source: format!("e{i},e{j}"),
            });
        }
    }

    for (i, cond) in pi.condition_tokens().iter().enumerate() {
        let c = supported(pi, cond);
        if c == Constraint::True && opts.prune_static {
            continue;
        }
        assertions.push(Assertion {
            constraint: c,
            tag: ConstraintTag::Support,
            source: format!("c{i}"),
        });
    }

    if opts.symmetry {
        for (c, source) in symmetry_constraints(pi) {
            if c == Constraint::True && opts.prune_static {
                continue;
            }
            assertions.push(Assertion { constraint: c, tag: ConstraintTag::Symmetry, source });
        }
    }

    Formula { vars, assertions, var_names, presence_names }
}

fn domain_bounds(
    p: &Problem,
    pi: &BoundedProblem,
    v: VarId,
    opts: &EncodeOptions,
) -> (Option<i64>, Option<i64>) {
    let var = pi.variables.get(v);
    let ty = p.type_def(var.ty);
    match &ty.kind {
        TypeKind::Objects(members) => (Some(0), Some(members.len() as i64 - 1)),
        TypeKind::IntRange(lo, hi) => (Some(*lo), Some(*hi)),
        TypeKind::Time => (Some(0), opts.horizon),
    }
}

fn sanitize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            out.push(ch);
        } else {
            out.push('_');
        }
    }
    if out.is_empty() || out.as_bytes()[0].is_ascii_digit() {
        out.insert(0, 'v');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounded::gen_problem;
    use crate::model::fixtures::truck_problem;

    fn formula(k: u32, opts: EncodeOptions) -> Formula {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, k);
        encode(&t.problem, &pi, &opts)
    }

    #[test]
    fn truck_depth_one_assertion_families() {
        let f = formula(1, EncodeOptions::default());
        // both effects are on loc: exactly one non-trivial coherence pair
        assert_eq!(f.count(ConstraintTag::Coherence), 1);
        assert_eq!(f.count(ConstraintTag::Support), 2);
        assert_eq!(f.count(ConstraintTag::Consistency), 2);
        assert_eq!(f.count(ConstraintTag::Symmetry), 0);
    }

    #[test]
    fn coherence_matches_worked_example_shape() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 1);
        let effs = pi.effect_tokens();
        let c = coherent(&pi, &effs[0], &effs[1]);
        // initial presence folds to true, leaving o_Go_1 => (tp0 <= start_1
        // v tp1 <= 0 v 0 != r_1)
        let Constraint::Implies(lhs, rhs) = &c else {
            panic!("expected implication, got {c:?}")
        };
        assert_eq!(**lhs, Constraint::Present(ChronicleId(1)));
        let Constraint::Or(ds) = &**rhs else { panic!("expected disjunction") };
        assert_eq!(ds.len(), 3);
    }

    #[test]
    fn cross_fluent_tokens_are_statically_coherent() {
        let mut t = truck_problem();
        // add a second fluent and an effect on it to the template
        let fuel = crate::model::FluentId(t.problem.fluents.len() as u32);
        let loc_ty = t.problem.type_id("Loc").unwrap();
        let truck_ty = t.problem.type_id("Truck").unwrap();
        t.problem.fluents.push(crate::model::FluentSignature {
            name: "fuel".into(),
            params: vec![truck_ty],
            value_type: loc_ty,
        });
        let tpl = &mut t.problem.templates[0];
        let eff = crate::model::Effect {
            start: tpl.start,
            end: tpl.end,
            sv: crate::model::StateVarRef { fluent: fuel, args: vec![tpl.params[0]] },
            value: tpl.params[1],
        };
        tpl.chronicle.effects.push(eff);
        let pi = gen_problem(&t.problem, 1);
        let effs = pi.effect_tokens();
        let loc_eff = &effs[0];
        let fuel_eff = effs.iter().find(|e| e.sv.fluent == fuel).unwrap();
        assert_eq!(coherent(&pi, loc_eff, fuel_eff), Constraint::True);
        assert_eq!(supported_by(&pi, &pi.condition_tokens()[1], fuel_eff), Constraint::False);
    }

    #[test]
    fn unsupportable_condition_encodes_present_implies_false() {
        let mut t = truck_problem();
        // strip every effect: the goal condition has no candidate supporter
        t.problem.initial.effects.clear();
        t.problem.templates[0].chronicle.effects.clear();
        let pi = gen_problem(&t.problem, 1);
        let goal = pi.condition_tokens().iter().find(|c| c.owner == ChronicleId(0)).unwrap();
        let c = supported(&pi, goal);
        assert_eq!(c, Constraint::False, "initial presence folds, leaving the empty support");
    }

    #[test]
    fn symmetry_family_counts() {
        let t = truck_problem();
        for (k, expected) in [(0u32, 0usize), (1, 0), (2, 2), (3, 4)] {
            let pi = gen_problem(&t.problem, k);
            assert_eq!(symmetry_constraints(&pi).len(), expected, "k={k}");
        }
    }

    #[test]
    fn pruning_disabled_gives_exact_pair_counts() {
        let opts = EncodeOptions { prune_static: false, ..EncodeOptions::default() };
        for k in 0..4u32 {
            let t = truck_problem();
            let pi = gen_problem(&t.problem, k);
            let f = encode(&t.problem, &pi, &opts);
            let e = pi.effect_tokens().len();
            assert_eq!(f.count(ConstraintTag::Coherence), e * e.saturating_sub(1) / 2);
            assert_eq!(f.count(ConstraintTag::Support), pi.condition_tokens().len());
        }
    }

    #[test]
    fn unused_objects_do_not_change_assertion_counts() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 2);
        let before = encode(&t.problem, &pi, &EncodeOptions::default()).stats();

        let mut padded = t.problem.clone();
        for ty in &mut padded.types {
            if let TypeKind::Objects(members) = &mut ty.kind {
                for i in 0..50 {
                    members.push(format!("pad_{i}"));
                }
            }
        }
        let pi = gen_problem(&padded, 2);
        let after = encode(&padded, &pi, &EncodeOptions::default()).stats();
        assert_eq!(before.assertions, after.assertions);
        assert_eq!(before.variables, after.variables);
    }

    #[test]
    fn variables_grow_linearly_with_depth() {
        let t = truck_problem();
        let counts: Vec<usize> = (0..5)
            .map(|k| {
                let pi = gen_problem(&t.problem, k);
                encode(&t.problem, &pi, &EncodeOptions::default()).vars.len()
            })
            .collect();
        let d1: Vec<i64> = counts.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
        assert!(d1.windows(2).all(|w| w[0] == w[1]), "first differences {d1:?} not constant");
    }

    #[test]
    fn horizon_clamps_every_timepoint() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 1);
        let opts = EncodeOptions { horizon: Some(20), ..EncodeOptions::default() };
        let f = encode(&t.problem, &pi, &opts);
        for name in ["t", "Go_start_1", "Go_end_1", "tp0", "tp1"] {
            let sv = f.vars.iter().find(|sv| sv.name == name).unwrap_or_else(|| panic!("{name} not declared"));
            assert_eq!(sv.upper, Some(20), "{name} missing horizon bound");
        }
    }
}
