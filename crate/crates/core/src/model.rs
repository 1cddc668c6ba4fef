//! Problem model: types, variables, state variables, chronicles and action
//! templates, plus well-formedness checking and template instantiation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::{CmpOp, Constraint, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub u32);

/// Index of a chronicle within a bounded problem (0 is the initial one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChronicleId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeKind {
    /// Finite set of named objects, encoded as ordinals `0..len-1`.
    Objects(Vec<String>),
    /// Inclusive integer range.
    IntRange(i64, i64),
    /// Non-negative integer instants; a single global time type.
    Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub name: String,
    pub kind: TypeKind,
}

impl TypeDef {
    /// Inclusive integer bounds of the value encoding; time has no upper bound.
    pub fn bounds(&self) -> (i64, Option<i64>) {
        match &self.kind {
            TypeKind::Objects(members) => (0, Some(members.len() as i64 - 1)),
            TypeKind::IntRange(lo, hi) => (*lo, Some(*hi)),
            TypeKind::Time => (0, None),
        }
    }

    pub fn is_time(&self) -> bool {
        matches!(self.kind, TypeKind::Time)
    }

    pub fn is_object(&self) -> bool {
        matches!(self.kind, TypeKind::Objects(_))
    }

    pub fn ordinal_of(&self, member: &str) -> Option<i64> {
        match &self.kind {
            TypeKind::Objects(members) => members.iter().position(|m| m == member).map(|i| i as i64),
            _ => None,
        }
    }

    pub fn member_name(&self, ordinal: i64) -> Option<&str> {
        match &self.kind {
            TypeKind::Objects(members) => {
                if ordinal >= 0 {
                    members.get(ordinal as usize).map(|s| s.as_str())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn contains(&self, value: i64) -> bool {
        let (lo, hi) = self.bounds();
        value >= lo && hi.map_or(true, |h| value <= h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarOrigin {
    Initial,
    Template(String),
    Instance { template: String, index: u32 },
    /// Persistence timepoint minted for an effect token.
    Persistence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VarId,
    pub ty: TypeId,
    pub label: String,
    pub origin: VarOrigin,
    /// Constants are variables with a pinned value (object ordinal or integer).
    pub binding: Option<i64>,
}

/// Arena of all variables of a problem (and, later, of a bounded problem).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarTable {
    vars: Vec<Variable>,
}

impl VarTable {
    pub fn new() -> Self {
        VarTable { vars: Vec::new() }
    }

    pub fn fresh(&mut self, ty: TypeId, label: impl Into<String>, origin: VarOrigin, binding: Option<i64>) -> VarId {
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Variable { id, ty, label: label.into(), origin, binding });
        id
    }

    pub fn get(&self, id: VarId) -> &Variable {
        &self.vars[id.0 as usize]
    }

    pub fn try_get(&self, id: VarId) -> Option<&Variable> {
        self.vars.get(id.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter()
    }

    pub fn binding(&self, id: VarId) -> Option<i64> {
        self.try_get(id).and_then(|v| v.binding)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluentSignature {
    pub name: String,
    pub params: Vec<TypeId>,
    pub value_type: TypeId,
}

/// A state variable expression `fluent(p1, .., pn)` parameterized by variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVarRef {
    pub fluent: FluentId,
    pub args: Vec<VarId>,
}

/// `[start, end] sv = value`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub start: VarId,
    pub end: VarId,
    pub sv: StateVarRef,
    pub value: VarId,
}

/// `[start, end] sv <- value`: the state variable transitions over
/// `]start, end[` and takes the value at `end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub start: VarId,
    pub end: VarId,
    pub sv: StateVarRef,
    pub value: VarId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChronicleOrigin {
    Initial,
    /// The schema chronicle embedded in an action template.
    Template(String),
    Instance { template: String, index: u32 },
}

impl ChronicleOrigin {
    pub fn name(&self) -> String {
        match self {
            ChronicleOrigin::Initial => "initial".to_string(),
            ChronicleOrigin::Template(t) => format!("{t}(template)"),
            ChronicleOrigin::Instance { template, index } => format!("{template}#{index}"),
        }
    }
}

impl fmt::Display for ChronicleOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chronicle {
    pub origin: ChronicleOrigin,
    pub vars: Vec<VarId>,
    pub constraints: Vec<Constraint>,
    pub conditions: Vec<Condition>,
    pub effects: Vec<Effect>,
    /// Designated start timepoint (action chronicles only).
    pub start: Option<VarId>,
}

impl Chronicle {
    pub fn empty(origin: ChronicleOrigin) -> Self {
        Chronicle {
            origin,
            vars: Vec::new(),
            constraints: Vec::new(),
            conditions: Vec::new(),
            effects: Vec::new(),
            start: None,
        }
    }
}

/// A chronicle schema with designated parameters and start/end timepoints.
/// Instantiation renames every variable freshly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub name: String,
    pub params: Vec<VarId>,
    pub start: VarId,
    pub end: VarId,
    pub chronicle: Chronicle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub types: Vec<TypeDef>,
    pub fluents: Vec<FluentSignature>,
    pub variables: VarTable,
    pub initial: Chronicle,
    pub templates: Vec<ActionTemplate>,
}

/// The global time type registered by [`Problem::new`].
pub const TIME_TYPE: TypeId = TypeId(0);

impl Problem {
    /// An empty problem with the global time type pre-registered.
    pub fn new() -> Self {
        Problem {
            types: vec![TypeDef { name: "time".to_string(), kind: TypeKind::Time }],
            fluents: Vec::new(),
            variables: VarTable::new(),
            initial: Chronicle::empty(ChronicleOrigin::Initial),
            templates: Vec::new(),
        }
    }

    pub fn time_type(&self) -> TypeId {
        TIME_TYPE
    }

    pub fn type_def(&self, id: TypeId) -> &TypeDef {
        &self.types[id.0 as usize]
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types.iter().position(|t| t.name == name).map(|i| TypeId(i as u32))
    }

    pub fn fluent(&self, id: FluentId) -> &FluentSignature {
        &self.fluents[id.0 as usize]
    }

    pub fn fluent_id(&self, name: &str) -> Option<FluentId> {
        self.fluents.iter().position(|f| f.name == name).map(|i| FluentId(i as u32))
    }

    pub fn template(&self, name: &str) -> Option<&ActionTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }

    /// Looks up an object constant across all enumeration types.
    pub fn constant(&self, name: &str) -> Option<(TypeId, i64)> {
        self.types.iter().enumerate().find_map(|(i, t)| {
            t.ordinal_of(name).map(|ord| (TypeId(i as u32), ord))
        })
    }

    pub fn var_type(&self, id: VarId) -> &TypeDef {
        self.type_def(self.variables.get(id).ty)
    }

    pub fn is_timepoint(&self, id: VarId) -> bool {
        self.var_type(id).is_time()
    }
}

impl Default for Problem {
    fn default() -> Self {
        Problem::new()
    }
}

/// A well-formedness finding: which chronicle, what is wrong.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub chronicle: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.chronicle, self.message)
    }
}

fn diag(chronicle: &ChronicleOrigin, message: String) -> Diagnostic {
    Diagnostic { chronicle: chronicle.name(), message }
}

/// Checks every well-formedness rule of a chronicle against its problem.
/// Returns one diagnostic per violation; an empty list means well-formed.
pub fn validate_chronicle(c: &Chronicle, p: &Problem) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let origin = &c.origin;

    let mut seen = BTreeMap::new();
    for &v in &c.vars {
        if p.variables.try_get(v).is_none() {
            out.push(diag(origin, format!("variable {} not in the problem's variable table", v.0)));
        }
        if seen.insert(v, ()).is_some() {
            out.push(diag(origin, format!("variable {} listed twice", v.0)));
        }
    }
    let owns = |v: VarId| seen.contains_key(&v);
    let label = |v: VarId| -> String {
        p.variables.try_get(v).map(|var| var.label.clone()).unwrap_or_else(|| format!("#{}", v.0))
    };

    // bindings must fall inside the variable's domain
    for &v in &c.vars {
        let Some(var) = p.variables.try_get(v) else { continue };
        let Some(ty) = p.types.get(var.ty.0 as usize) else {
            out.push(diag(origin, format!("variable {} has an unknown type", var.label)));
            continue;
        };
        if let Some(b) = var.binding {
            if !ty.contains(b) {
                out.push(diag(
                    origin,
                    format!("variable {} bound to {} outside its domain", var.label, b),
                ));
            }
        }
    }

    let check_timepoint = |v: VarId, what: &str, out: &mut Vec<Diagnostic>| {
        if !owns(v) {
            out.push(diag(origin, format!("unbound variable: {what} references {} not in V", label(v))));
        } else if !p.is_timepoint(v) {
            out.push(diag(origin, format!("{what} {} is not of the time type", label(v))));
        }
    };

    let check_sv = |sv: &StateVarRef, value: VarId, what: &str, out: &mut Vec<Diagnostic>| {
        let Some(fluent) = p.fluents.get(sv.fluent.0 as usize) else {
            out.push(diag(origin, format!("{what} references unknown fluent")));
            return;
        };
        if sv.args.len() != fluent.params.len() {
            out.push(diag(
                origin,
                format!(
                    "{what} on {} has {} arguments, expected {}",
                    fluent.name,
                    sv.args.len(),
                    fluent.params.len()
                ),
            ));
        }
        for (i, &a) in sv.args.iter().enumerate() {
            if !owns(a) {
                out.push(diag(origin, format!("unbound variable: {what} argument {} not in V", label(a))));
            } else if let Some(expected) = fluent.params.get(i) {
                if p.variables.get(a).ty != *expected {
                    out.push(diag(
                        origin,
                        format!("{what} argument {} has the wrong type for {}", label(a), fluent.name),
                    ));
                }
            }
        }
        if !owns(value) {
            out.push(diag(origin, format!("unbound variable: {what} value {} not in V", label(value))));
        } else if p.variables.get(value).ty != fluent.value_type {
            out.push(diag(
                origin,
                format!("{what} value {} does not match the value type of {}", label(value), fluent.name),
            ));
        }
    };

    for (i, cond) in c.conditions.iter().enumerate() {
        let what = format!("condition {i}");
        check_timepoint(cond.start, &what, &mut out);
        check_timepoint(cond.end, &what, &mut out);
        check_sv(&cond.sv, cond.value, &what, &mut out);
    }
    for (i, eff) in c.effects.iter().enumerate() {
        let what = format!("effect {i}");
        check_timepoint(eff.start, &what, &mut out);
        check_timepoint(eff.end, &what, &mut out);
        check_sv(&eff.sv, eff.value, &what, &mut out);
    }

    // constraints: variables bound to V, atoms type-consistent
    for (i, x) in c.constraints.iter().enumerate() {
        let what = format!("constraint {i}");
        let mut refs = Vec::new();
        x.collect_vars(&mut refs);
        for v in refs {
            if !owns(v) {
                out.push(diag(origin, format!("unbound variable: {what} references {} not in V", label(v))));
            }
        }
        let mut prez = Vec::new();
        x.collect_presence(&mut prez);
        if !prez.is_empty() {
            out.push(diag(origin, format!("{what} uses a presence literal inside a chronicle")));
        }
        check_atom_types(x, c, p, origin, &what, &mut out);
    }

    if let Some(s) = c.start {
        if !owns(s) {
            out.push(diag(origin, "designated start timepoint not in V".to_string()));
        } else if !p.is_timepoint(s) {
            out.push(diag(origin, "designated start is not of the time type".to_string()));
        }
    }

    out
}

fn check_atom_types(
    x: &Constraint,
    c: &Chronicle,
    p: &Problem,
    origin: &ChronicleOrigin,
    what: &str,
    out: &mut Vec<Diagnostic>,
) {
    let numeric = |v: VarId| -> bool {
        matches!(p.var_type(v).kind, TypeKind::IntRange(..) | TypeKind::Time)
    };
    match x {
        Constraint::Atom(a) => {
            match (a.lhs, a.rhs) {
                (Term::Var(l), Term::Var(r)) => {
                    let (Some(lv), Some(rv)) = (p.variables.try_get(l), p.variables.try_get(r)) else {
                        return;
                    };
                    if lv.ty != rv.ty {
                        out.push(diag(
                            origin,
                            format!("{what}: comparison between different types {} and {}", lv.label, rv.label),
                        ));
                    } else if !numeric(l) {
                        // object operands: only plain (dis)equality
                        if a.offset != 0 {
                            out.push(diag(origin, format!("{what}: offset on object-typed operands")));
                        }
                        if matches!(a.op, CmpOp::Le | CmpOp::Lt) {
                            out.push(diag(origin, format!("{what}: ordering on object-typed operands")));
                        }
                    }
                }
                (Term::Var(v), Term::Lit(_)) | (Term::Lit(_), Term::Var(v)) => {
                    if p.variables.try_get(v).is_some() && !numeric(v) {
                        out.push(diag(
                            origin,
                            format!("{what}: literal comparison with object-typed variable"),
                        ));
                    }
                }
                (Term::Lit(_), Term::Lit(_)) => {}
            }
        }
        Constraint::Not(inner) => check_atom_types(inner, c, p, origin, what, out),
        Constraint::And(parts) | Constraint::Or(parts) => {
            for part in parts {
                check_atom_types(part, c, p, origin, what, out);
            }
        }
        Constraint::Implies(l, r) => {
            check_atom_types(l, c, p, origin, what, out);
            check_atom_types(r, c, p, origin, what, out);
        }
        _ => {}
    }
}

/// Checks problem-level invariants plus every chronicle.
pub fn validate_problem(p: &Problem) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let top = ChronicleOrigin::Initial;

    // names unique across types, fluents and templates
    let mut names = BTreeMap::new();
    for t in &p.types {
        if names.insert(t.name.clone(), "type").is_some() {
            out.push(diag(&top, format!("duplicate name {}", t.name)));
        }
    }
    for f in &p.fluents {
        if names.insert(f.name.clone(), "fluent").is_some() {
            out.push(diag(&top, format!("duplicate name {}", f.name)));
        }
    }
    for t in &p.templates {
        if names.insert(t.name.clone(), "action").is_some() {
            out.push(diag(&top, format!("duplicate name {}", t.name)));
        }
    }

    let time_kinds = p.types.iter().filter(|t| t.is_time()).count();
    if time_kinds != 1 {
        out.push(diag(&top, format!("expected exactly one time type, found {time_kinds}")));
    }

    for t in &p.types {
        match &t.kind {
            TypeKind::Objects(members) => {
                if members.is_empty() {
                    out.push(diag(&top, format!("type {} has no members", t.name)));
                }
                let mut seen = BTreeMap::new();
                for m in members {
                    if seen.insert(m, ()).is_some() {
                        out.push(diag(&top, format!("type {} repeats member {m}", t.name)));
                    }
                }
            }
            TypeKind::IntRange(lo, hi) => {
                if lo > hi {
                    out.push(diag(&top, format!("type {} has an empty range [{lo}, {hi}]", t.name)));
                }
            }
            TypeKind::Time => {}
        }
    }

    for f in &p.fluents {
        for ty in f.params.iter().chain([&f.value_type]) {
            if p.types.get(ty.0 as usize).is_none() {
                out.push(diag(&top, format!("fluent {} references an unknown type", f.name)));
            }
        }
    }

    out.extend(validate_chronicle(&p.initial, p));
    if !matches!(p.initial.origin, ChronicleOrigin::Initial) {
        out.push(diag(&top, "initial chronicle must have the initial origin".to_string()));
    }

    for t in &p.templates {
        out.extend(validate_chronicle(&t.chronicle, p));
        let origin = &t.chronicle.origin;
        if t.chronicle.start != Some(t.start) {
            out.push(diag(origin, format!("template {} must designate its start timepoint", t.name)));
        }
        for v in [t.start, t.end] {
            if !t.chronicle.vars.contains(&v) {
                out.push(diag(origin, format!("template {} start/end not in V", t.name)));
            }
        }
        for &param in &t.params {
            if !t.chronicle.vars.contains(&param) {
                out.push(diag(origin, format!("template {} parameter not in V", t.name)));
            }
        }
    }

    out
}

/// Instantiates a template into a fresh chronicle: every variable is copied
/// under a new id with the instance index appended to its label, so two
/// instances never share variables.
pub fn instantiate_template(
    template: &ActionTemplate,
    index: u32,
    p: &Problem,
    vars: &mut VarTable,
) -> Result<Chronicle, Vec<Diagnostic>> {
    let diags = validate_chronicle(&template.chronicle, p);
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(instantiate_unchecked(template, index, vars).0)
}

/// Instantiation without the validity check; also returns the substitution,
/// which the bounded-problem builder uses to map designated variables.
pub(crate) fn instantiate_unchecked(
    template: &ActionTemplate,
    index: u32,
    vars: &mut VarTable,
) -> (Chronicle, BTreeMap<VarId, VarId>) {
    debug_assert!(index >= 1);
    let mut map = BTreeMap::new();
    for &v in &template.chronicle.vars {
        let old = vars.get(v).clone();
        let fresh = vars.fresh(
            old.ty,
            format!("{}_{}", old.label, index),
            VarOrigin::Instance { template: template.name.clone(), index },
            old.binding,
        );
        map.insert(v, fresh);
    }
    let subst = |v: VarId| map[&v];
    let chronicle = Chronicle {
        origin: ChronicleOrigin::Instance { template: template.name.clone(), index },
        vars: template.chronicle.vars.iter().map(|&v| subst(v)).collect(),
        constraints: template.chronicle.constraints.iter().map(|x| x.map_vars(&subst)).collect(),
        conditions: template
            .chronicle
            .conditions
            .iter()
            .map(|c| Condition {
                start: subst(c.start),
                end: subst(c.end),
                sv: StateVarRef { fluent: c.sv.fluent, args: c.sv.args.iter().map(|&a| subst(a)).collect() },
                value: subst(c.value),
            })
            .collect(),
        effects: template
            .chronicle
            .effects
            .iter()
            .map(|e| Effect {
                start: subst(e.start),
                end: subst(e.end),
                sv: StateVarRef { fluent: e.sv.fluent, args: e.sv.args.iter().map(|&a| subst(a)).collect() },
                value: subst(e.value),
            })
            .collect(),
        start: template.chronicle.start.map(subst),
    };
    (chronicle, map)
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! The truck domain used throughout the unit tests: one Go action with
    //! duration 10, a truck initially at L0, and the goal of reaching L2 or
    //! L3 before time 100.

    use super::*;
    use crate::constraint::{CmpOp, Constraint, Term};

    pub struct Truck {
        pub problem: Problem,
        pub loc: FluentId,
        pub goal_t: VarId,
        pub goal_l: VarId,
    }

    pub fn truck_problem() -> Truck {
        let mut p = Problem::new();
        let truck_ty = TypeId(p.types.len() as u32);
        p.types.push(TypeDef { name: "Truck".into(), kind: TypeKind::Objects(vec!["R1".into()]) });
        let loc_ty = TypeId(p.types.len() as u32);
        p.types.push(TypeDef {
            name: "Loc".into(),
            kind: TypeKind::Objects(vec!["L0".into(), "L1".into(), "L2".into(), "L3".into()]),
        });
        let loc = FluentId(p.fluents.len() as u32);
        p.fluents.push(FluentSignature { name: "loc".into(), params: vec![truck_ty], value_type: loc_ty });

        // template Go(r, ls, le): duration 10, condition at start, effect over [start,end]
        let r = p.variables.fresh(truck_ty, "r", VarOrigin::Template("Go".into()), None);
        let ls = p.variables.fresh(loc_ty, "ls", VarOrigin::Template("Go".into()), None);
        let le = p.variables.fresh(loc_ty, "le", VarOrigin::Template("Go".into()), None);
        let ts = p.variables.fresh(TIME_TYPE, "start", VarOrigin::Template("Go".into()), None);
        let te = p.variables.fresh(TIME_TYPE, "end", VarOrigin::Template("Go".into()), None);
        let go = ActionTemplate {
            name: "Go".into(),
            params: vec![r, ls, le],
            start: ts,
            end: te,
            chronicle: Chronicle {
                origin: ChronicleOrigin::Template("Go".into()),
                vars: vec![r, ls, le, ts, te],
                constraints: vec![Constraint::eq_offset(te, ts, 10), Constraint::ne_vars(ls, le)],
                conditions: vec![Condition {
                    start: ts,
                    end: ts,
                    sv: StateVarRef { fluent: loc, args: vec![r] },
                    value: ls,
                }],
                effects: vec![Effect {
                    start: ts,
                    end: te,
                    sv: StateVarRef { fluent: loc, args: vec![r] },
                    value: le,
                }],
                start: Some(ts),
            },
        };
        p.templates.push(go);

        // initial chronicle: loc(R1) <- L0 at [0,0]; goal [t,t] loc(R1) = l
        // with t < 100 and l in {L2, L3}
        let r1 = p.variables.fresh(truck_ty, "R1", VarOrigin::Initial, Some(0));
        let l0 = p.variables.fresh(loc_ty, "L0", VarOrigin::Initial, Some(0));
        let zero = p.variables.fresh(TIME_TYPE, "_0", VarOrigin::Initial, Some(0));
        let goal_t = p.variables.fresh(TIME_TYPE, "t", VarOrigin::Initial, None);
        let goal_l = p.variables.fresh(loc_ty, "l", VarOrigin::Initial, None);
        let l2 = p.variables.fresh(loc_ty, "L2", VarOrigin::Initial, Some(2));
        let l3 = p.variables.fresh(loc_ty, "L3", VarOrigin::Initial, Some(3));
        p.initial = Chronicle {
            origin: ChronicleOrigin::Initial,
            vars: vec![r1, l0, zero, goal_t, goal_l, l2, l3],
            constraints: vec![
                Constraint::atom(Term::Var(goal_t), CmpOp::Lt, Term::Lit(100), 0),
                Constraint::member_of(goal_l, [Term::Var(l2), Term::Var(l3)]),
            ],
            conditions: vec![Condition {
                start: goal_t,
                end: goal_t,
                sv: StateVarRef { fluent: loc, args: vec![r1] },
                value: goal_l,
            }],
            effects: vec![Effect {
                start: zero,
                end: zero,
                sv: StateVarRef { fluent: loc, args: vec![r1] },
                value: l0,
            }],
            start: None,
        };

        Truck { problem: p, loc, goal_t, goal_l }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::truck_problem;
    use super::*;

    #[test]
    fn truck_problem_is_well_formed() {
        let t = truck_problem();
        assert_eq!(validate_problem(&t.problem), vec![]);
        assert_eq!(validate_chronicle(&t.problem.templates[0].chronicle, &t.problem), vec![]);
    }

    #[test]
    fn empty_chronicle_is_well_formed() {
        let t = truck_problem();
        let c = Chronicle::empty(ChronicleOrigin::Initial);
        assert_eq!(validate_chronicle(&c, &t.problem), vec![]);
    }

    #[test]
    fn condition_with_foreign_timepoint_is_flagged() {
        let t = truck_problem();
        let mut c = t.problem.initial.clone();
        // drop the goal timepoint from V while a condition still uses it
        c.vars.retain(|&v| v != t.goal_t);
        let diags = validate_chronicle(&c, &t.problem);
        assert!(
            diags.iter().any(|d| d.message.contains("unbound variable")),
            "expected an unbound-variable diagnostic, got {diags:?}"
        );
    }

    #[test]
    fn instantiation_renames_and_is_disjoint() {
        let t = truck_problem();
        let mut vars = t.problem.variables.clone();
        let go = &t.problem.templates[0];
        let c1 = instantiate_template(go, 1, &t.problem, &mut vars).unwrap();
        let c2 = instantiate_template(go, 2, &t.problem, &mut vars).unwrap();

        let labels: Vec<_> = c1.vars.iter().map(|&v| vars.get(v).label.clone()).collect();
        assert_eq!(labels, ["r_1", "ls_1", "le_1", "start_1", "end_1"]);

        let set1: alloc::collections::BTreeSet<_> = c1.vars.iter().collect();
        assert!(c2.vars.iter().all(|v| !set1.contains(v)), "instances must not share variables");
    }

    #[test]
    fn instantiation_is_deterministic() {
        let t = truck_problem();
        let go = &t.problem.templates[0];
        let mut vars_a = t.problem.variables.clone();
        let mut vars_b = t.problem.variables.clone();
        let a = instantiate_template(go, 1, &t.problem, &mut vars_a).unwrap();
        let b = instantiate_template(go, 1, &t.problem, &mut vars_b).unwrap();
        assert_eq!(a, b);
        assert_eq!(vars_a, vars_b);
    }

    #[test]
    fn instantiated_chronicles_stay_well_formed() {
        let t = truck_problem();
        let mut p = t.problem.clone();
        let go = p.templates[0].clone();
        let mut vars = p.variables.clone();
        let c = instantiate_template(&go, 3, &p, &mut vars).unwrap();
        p.variables = vars;
        assert_eq!(validate_chronicle(&c, &p), vec![]);
    }

    #[test]
    fn zero_parameter_template_instantiates_to_timepoints_only() {
        let mut p = Problem::new();
        let ty = TypeId(p.types.len() as u32);
        p.types.push(TypeDef { name: "Unit".into(), kind: TypeKind::Objects(vec!["u".into()]) });
        let f = FluentId(0);
        p.fluents.push(FluentSignature { name: "flag".into(), params: vec![], value_type: ty });
        let ts = p.variables.fresh(TIME_TYPE, "start", VarOrigin::Template("Tick".into()), None);
        let te = p.variables.fresh(TIME_TYPE, "end", VarOrigin::Template("Tick".into()), None);
        let u = p.variables.fresh(ty, "u", VarOrigin::Template("Tick".into()), Some(0));
        p.templates.push(ActionTemplate {
            name: "Tick".into(),
            params: vec![],
            start: ts,
            end: te,
            chronicle: Chronicle {
                origin: ChronicleOrigin::Template("Tick".into()),
                vars: vec![ts, te, u],
                constraints: vec![Constraint::eq_offset(te, ts, 1)],
                conditions: vec![],
                effects: vec![Effect { start: ts, end: te, sv: StateVarRef { fluent: f, args: vec![] }, value: u }],
                start: Some(ts),
            },
        });
        let mut vars = p.variables.clone();
        let c = instantiate_template(&p.templates[0], 1, &p, &mut vars).unwrap();
        assert_eq!(c.vars.len(), 3);
        assert!(c.conditions.is_empty());
    }
}
