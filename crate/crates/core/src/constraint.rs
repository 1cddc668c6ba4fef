//! Constraint trees over chronicle variables.
//!
//! Atoms relate two integer-valued operands (variables or literals) with an
//! optional integer offset on the right-hand side: `lhs op rhs + offset`.
//! Object values participate through their ordinal encoding, so a single
//! integer comparison language covers timepoints, integer fluents and object
//! equality. Presence literals refer to the owning chronicle of an optional
//! token and are resolved at encoding or evaluation time.

use alloc::{boxed::Box, vec::Vec};
use serde::{Deserialize, Serialize};

use crate::model::{ChronicleId, VarId};

/// An integer-valued operand: a variable reference or a literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Var(VarId),
    Lit(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Lt,
}

/// `lhs op rhs + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub lhs: Term,
    pub op: CmpOp,
    pub rhs: Term,
    pub offset: i64,
}

impl Atom {
    pub fn new(lhs: Term, op: CmpOp, rhs: Term, offset: i64) -> Self {
        Atom { lhs, op, rhs, offset }
    }

    pub fn eval(&self, assign: &dyn Fn(VarId) -> i64) -> bool {
        let l = self.lhs.eval(assign);
        let r = self.rhs.eval(assign) + self.offset;
        match self.op {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Le => l <= r,
            CmpOp::Lt => l < r,
        }
    }

    /// Variables referenced by this atom.
    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        let a = match self.lhs {
            Term::Var(v) => Some(v),
            Term::Lit(_) => None,
        };
        let b = match self.rhs {
            Term::Var(v) => Some(v),
            Term::Lit(_) => None,
        };
        a.into_iter().chain(b)
    }
}

impl Term {
    pub fn eval(&self, assign: &dyn Fn(VarId) -> i64) -> i64 {
        match *self {
            Term::Var(v) => assign(v),
            Term::Lit(c) => c,
        }
    }

    fn resolve(&self, binding: &dyn Fn(VarId) -> Option<i64>) -> Term {
        match *self {
            Term::Var(v) => match binding(v) {
                Some(c) => Term::Lit(c),
                None => *self,
            },
            lit => lit,
        }
    }
}

/// A boolean combination of atoms and presence literals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    True,
    False,
    Atom(Atom),
    /// Presence of an optional chronicle; constant true for the initial one.
    Present(ChronicleId),
    Not(Box<Constraint>),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
    Implies(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn atom(lhs: Term, op: CmpOp, rhs: Term, offset: i64) -> Self {
        Constraint::Atom(Atom::new(lhs, op, rhs, offset))
    }

    /// `a = b`
    pub fn eq_vars(a: VarId, b: VarId) -> Self {
        Self::atom(Term::Var(a), CmpOp::Eq, Term::Var(b), 0)
    }

    /// `a != b`
    pub fn ne_vars(a: VarId, b: VarId) -> Self {
        Self::atom(Term::Var(a), CmpOp::Ne, Term::Var(b), 0)
    }

    /// `a <= b`
    pub fn le_vars(a: VarId, b: VarId) -> Self {
        Self::atom(Term::Var(a), CmpOp::Le, Term::Var(b), 0)
    }

    /// `a = b + c`
    pub fn eq_offset(a: VarId, b: VarId, c: i64) -> Self {
        Self::atom(Term::Var(a), CmpOp::Eq, Term::Var(b), c)
    }

    pub fn and(mut parts: Vec<Constraint>) -> Self {
        if parts.is_empty() {
            Constraint::True
        } else if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Constraint::And(parts)
        }
    }

    pub fn or(mut parts: Vec<Constraint>) -> Self {
        if parts.is_empty() {
            Constraint::False
        } else if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Constraint::Or(parts)
        }
    }

    pub fn implies(lhs: Constraint, rhs: Constraint) -> Self {
        Constraint::Implies(Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates under a total assignment and a presence valuation.
    pub fn eval(&self, assign: &dyn Fn(VarId) -> i64, present: &dyn Fn(ChronicleId) -> bool) -> bool {
        match self {
            Constraint::True => true,
            Constraint::False => false,
            Constraint::Atom(a) => a.eval(assign),
            Constraint::Present(c) => present(*c),
            Constraint::Not(inner) => !inner.eval(assign, present),
            Constraint::And(parts) => parts.iter().all(|p| p.eval(assign, present)),
            Constraint::Or(parts) => parts.iter().any(|p| p.eval(assign, present)),
            Constraint::Implies(l, r) => !l.eval(assign, present) || r.eval(assign, present),
        }
    }

    /// Rewrites variable references (used by template instantiation).
    pub fn map_vars(&self, map: &dyn Fn(VarId) -> VarId) -> Constraint {
        let map_term = |t: &Term| match *t {
            Term::Var(v) => Term::Var(map(v)),
            lit => lit,
        };
        match self {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Atom(a) => Constraint::Atom(Atom {
                lhs: map_term(&a.lhs),
                op: a.op,
                rhs: map_term(&a.rhs),
                offset: a.offset,
            }),
            Constraint::Present(c) => Constraint::Present(*c),
            Constraint::Not(inner) => Constraint::Not(Box::new(inner.map_vars(map))),
            Constraint::And(parts) => Constraint::And(parts.iter().map(|p| p.map_vars(map)).collect()),
            Constraint::Or(parts) => Constraint::Or(parts.iter().map(|p| p.map_vars(map)).collect()),
            Constraint::Implies(l, r) => {
                Constraint::Implies(Box::new(l.map_vars(map)), Box::new(r.map_vars(map)))
            }
        }
    }

    /// Substitutes bound variables by literals and folds what becomes
    /// statically decided. Presence literals fold when they are known
    /// constants (the initial chronicle).
    pub fn normalize(
        &self,
        binding: &dyn Fn(VarId) -> Option<i64>,
        presence: &dyn Fn(ChronicleId) -> Option<bool>,
    ) -> Constraint {
        match self {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Atom(a) => {
                let lhs = a.lhs.resolve(binding);
                let rhs = a.rhs.resolve(binding);
                let folded = Atom { lhs, op: a.op, rhs, offset: a.offset };
                match (lhs, rhs) {
                    (Term::Lit(_), Term::Lit(_)) => {
                        if folded.eval(&|_| unreachable!()) {
                            Constraint::True
                        } else {
                            Constraint::False
                        }
                    }
                    (Term::Var(x), Term::Var(y)) if x == y => {
                        // x op x + offset is decided by the offset alone
                        let holds = match a.op {
                            CmpOp::Eq => a.offset == 0,
                            CmpOp::Ne => a.offset != 0,
                            CmpOp::Le => a.offset >= 0,
                            CmpOp::Lt => a.offset > 0,
                        };
                        if holds {
                            Constraint::True
                        } else {
                            Constraint::False
                        }
                    }
                    _ => Constraint::Atom(folded),
                }
            }
            Constraint::Present(c) => match presence(*c) {
                Some(true) => Constraint::True,
                Some(false) => Constraint::False,
                None => Constraint::Present(*c),
            },
            Constraint::Not(inner) => match inner.normalize(binding, presence) {
                Constraint::True => Constraint::False,
                Constraint::False => Constraint::True,
                other => Constraint::Not(Box::new(other)),
            },
            Constraint::And(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    match p.normalize(binding, presence) {
                        Constraint::True => {}
                        Constraint::False => return Constraint::False,
                        other => out.push(other),
                    }
                }
                Constraint::and(out)
            }
            Constraint::Or(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    match p.normalize(binding, presence) {
                        Constraint::False => {}
                        Constraint::True => return Constraint::True,
                        other => out.push(other),
                    }
                }
                Constraint::or(out)
            }
            Constraint::Implies(l, r) => {
                let l = l.normalize(binding, presence);
                let r = r.normalize(binding, presence);
                match (l, r) {
                    (Constraint::False, _) => Constraint::True,
                    (Constraint::True, r) => r,
                    (_, Constraint::True) => Constraint::True,
                    // keep `p => false` as written, it reads as intended
                    (l, r) => Constraint::implies(l, r),
                }
            }
        }
    }

    /// All variables referenced anywhere in the tree.
    pub fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Constraint::True | Constraint::False | Constraint::Present(_) => {}
            Constraint::Atom(a) => out.extend(a.vars()),
            Constraint::Not(inner) => inner.collect_vars(out),
            Constraint::And(parts) | Constraint::Or(parts) => {
                for p in parts {
                    p.collect_vars(out);
                }
            }
            Constraint::Implies(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Presence literals referenced anywhere in the tree.
    pub fn collect_presence(&self, out: &mut Vec<ChronicleId>) {
        match self {
            Constraint::True | Constraint::False | Constraint::Atom(_) => {}
            Constraint::Present(c) => out.push(*c),
            Constraint::Not(inner) => inner.collect_presence(out),
            Constraint::And(parts) | Constraint::Or(parts) => {
                for p in parts {
                    p.collect_presence(out);
                }
            }
            Constraint::Implies(l, r) => {
                l.collect_presence(out);
                r.collect_presence(out);
            }
        }
    }

    /// Human-readable rendering with a caller-supplied variable labeler.
    pub fn render(&self, label: &dyn Fn(VarId) -> alloc::string::String) -> alloc::string::String {
        use alloc::string::String;
        use core::fmt::Write;
        fn term(t: &Term, label: &dyn Fn(VarId) -> String) -> String {
            match *t {
                Term::Var(v) => label(v),
                Term::Lit(c) => {
                    let mut s = String::new();
                    let _ = write!(s, "{c}");
                    s
                }
            }
        }
        fn go(c: &Constraint, label: &dyn Fn(VarId) -> String, out: &mut String) {
            match c {
                Constraint::True => out.push_str("true"),
                Constraint::False => out.push_str("false"),
                Constraint::Present(id) => {
                    let _ = write!(out, "present(#{})", id.0);
                }
                Constraint::Atom(a) => {
                    out.push_str(&term(&a.lhs, label));
                    out.push_str(match a.op {
                        CmpOp::Eq => " = ",
                        CmpOp::Ne => " != ",
                        CmpOp::Le => " <= ",
                        CmpOp::Lt => " < ",
                    });
                    out.push_str(&term(&a.rhs, label));
                    if a.offset != 0 {
                        let _ = write!(out, " + {}", a.offset);
                    }
                }
                Constraint::Not(inner) => {
                    out.push_str("not(");
                    go(inner, label, out);
                    out.push(')');
                }
                Constraint::And(parts) | Constraint::Or(parts) => {
                    let sep = if matches!(c, Constraint::And(_)) { " and " } else { " or " };
                    out.push('(');
                    for (i, p) in parts.iter().enumerate() {
                        if i > 0 {
                            out.push_str(sep);
                        }
                        go(p, label, out);
                    }
                    out.push(')');
                }
                Constraint::Implies(l, r) => {
                    out.push('(');
                    go(l, label, out);
                    out.push_str(" => ");
                    go(r, label, out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        go(self, label, &mut out);
        out
    }

    /// Membership constraint `v in {values}` as a disjunction of equalities.
    pub fn member_of(v: VarId, values: impl IntoIterator<Item = Term>) -> Constraint {
        Constraint::or(
            values
                .into_iter()
                .map(|t| Constraint::atom(Term::Var(v), CmpOp::Eq, t, 0))
                .collect::<Vec<_>>(),
        )
    }
}
