//! Serialization of a [`Formula`](crate::encode::Formula) to an SMT-LIB v2
//! script (logic QF_LIA). The output is deterministic: equal formulas emit
//! byte-identical scripts.

use alloc::string::String;
use core::fmt::Write;

use crate::constraint::{CmpOp, Constraint, Term};
use crate::encode::{Formula, Sort};

/// Renders the formula as a complete SMT-LIB v2 script ending with
/// `(check-sat)` and `(get-model)`. Assertions carry their family and source
/// as a `; tag:` comment, which solvers ignore.
pub fn emit_smtlib(f: &Formula) -> String {
    let mut out = String::new();
    out.push_str("; bounded chronicle planning problem (QF_LIA)\n");
    out.push_str("(set-logic QF_LIA)\n");
    for sv in &f.vars {
        let sort = match sv.sort {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
        };
        let _ = writeln!(out, "(declare-const {} {})", sv.name, sort);
    }
    for a in &f.assertions {
        let _ = writeln!(out, "; tag: {} src={}", a.tag.label(), a.source);
        out.push_str("(assert ");
        render(&a.constraint, f, &mut out);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

fn render(c: &Constraint, f: &Formula, out: &mut String) {
    match c {
        Constraint::True => out.push_str("true"),
        Constraint::False => out.push_str("false"),
        Constraint::Present(id) => match f.presence_name(*id) {
            Some(name) => out.push_str(name),
            None => out.push_str("true"),
        },
        Constraint::Atom(a) => {
            let (op, negate) = match a.op {
                CmpOp::Eq => ("=", false),
                CmpOp::Ne => ("=", true),
                CmpOp::Le => ("<=", false),
                CmpOp::Lt => ("<", false),
            };
            if negate {
                out.push_str("(not ");
            }
            out.push('(');
            out.push_str(op);
            out.push(' ');
            render_term(a.lhs, 0, f, out);
            out.push(' ');
            render_term(a.rhs, a.offset, f, out);
            out.push(')');
            if negate {
                out.push(')');
            }
        }
        Constraint::Not(inner) => {
            out.push_str("(not ");
            render(inner, f, out);
            out.push(')');
        }
        Constraint::And(parts) => render_nary("and", parts, f, out),
        Constraint::Or(parts) => render_nary("or", parts, f, out),
        Constraint::Implies(l, r) => {
            out.push_str("(=> ");
            render(l, f, out);
            out.push(' ');
            render(r, f, out);
            out.push(')');
        }
    }
}

fn render_nary(op: &str, parts: &[Constraint], f: &Formula, out: &mut String) {
    match parts {
        [] => out.push_str(if op == "and" { "true" } else { "false" }),
        [single] => render(single, f, out),
        _ => {
            out.push('(');
            out.push_str(op);
            for p in parts {
                out.push(' ');
                render(p, f, out);
            }
            out.push(')');
        }
    }
}

fn render_term(t: Term, offset: i64, f: &Formula, out: &mut String) {
    match t {
        Term::Lit(c) => render_int(c + offset, out),
        Term::Var(v) => {
            let name = f.var_name(v).expect("assertion references an undeclared variable");
            if offset == 0 {
                out.push_str(name);
            } else if offset > 0 {
                let _ = write!(out, "(+ {name} {offset})");
            } else {
                let _ = write!(out, "(- {name} {})", -offset);
            }
        }
    }
}

fn render_int(value: i64, out: &mut String) {
    if value < 0 {
        let _ = write!(out, "(- {})", -value);
    } else {
        let _ = write!(out, "{value}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounded::gen_problem;
    use crate::encode::{encode, EncodeOptions};
    use crate::model::fixtures::truck_problem;

    #[test]
    fn truck_depth_one_script_contains_expected_lines() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 1);
        let f = encode(&t.problem, &pi, &EncodeOptions::default());
        let script = emit_smtlib(&f);
        assert!(script.starts_with("; bounded chronicle planning problem"));
        assert!(script.contains("(set-logic QF_LIA)"));
        assert!(script.contains("(declare-const o_Go_1 Bool)"));
        assert!(script.contains("(declare-const Go_start_1 Int)"));
        // duration constraint under the presence guard
        assert!(script.contains("(= Go_end_1 (+ Go_start_1 10))"), "{script}");
        assert!(script.ends_with("(check-sat)\n(get-model)\n"));
    }

    #[test]
    fn emission_is_deterministic() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 2);
        let f = encode(&t.problem, &pi, &EncodeOptions::default());
        let a = emit_smtlib(&f);
        let pi = gen_problem(&t.problem, 2);
        let f = encode(&t.problem, &pi, &EncodeOptions::default());
        let b = emit_smtlib(&f);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_formula_is_header_and_checks_only() {
        let p = crate::model::Problem::new();
        let pi = gen_problem(&p, 0);
        let f = encode(&p, &pi, &EncodeOptions::default());
        let script = emit_smtlib(&f);
        assert_eq!(
            script,
            "; bounded chronicle planning problem (QF_LIA)\n(set-logic QF_LIA)\n(check-sat)\n(get-model)\n"
        );
    }

    #[test]
    fn negative_offsets_render_as_subtraction() {
        let t = truck_problem();
        let pi = gen_problem(&t.problem, 1);
        let mut f = encode(&t.problem, &pi, &EncodeOptions::default());
        // synthesize an assertion with a negative offset and a negative literal
        use crate::constraint::{Atom, CmpOp, Constraint, Term};
        let v = *pi.chronicles[0]
            .vars
            .iter()
            .find(|&&v| pi.variables.get(v).binding.is_none())
            .unwrap();
        f.assertions.push(crate::encode::Assertion {
            constraint: Constraint::Atom(Atom::new(Term::Var(v), CmpOp::Le, Term::Var(v), -3)),
            tag: crate::encode::ConstraintTag::Domain,
            source: "test".into(),
        });
        f.assertions.push(crate::encode::Assertion {
            constraint: Constraint::Atom(Atom::new(Term::Lit(-5), CmpOp::Le, Term::Var(v), 0)),
            tag: crate::encode::ConstraintTag::Domain,
            source: "test".into(),
        });
        let script = emit_smtlib(&f);
        assert!(script.contains("(- t 3)"), "{script}");
        assert!(script.contains("(- 5)"), "{script}");
    }
}
