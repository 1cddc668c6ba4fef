//! SMT-LIB v2 script front end: commands, sorted declarations and typed
//! terms over the supported fragment (boolean structure over linear integer
//! comparisons that normalize to difference constraints).

use std::collections::BTreeMap;
use std::fmt;

use crate::sexpr::Sexpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
        })
    }
}

/// Linear integer expression: coefficient per declared variable plus a
/// constant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    pub coeffs: BTreeMap<usize, i64>,
    pub constant: i64,
}

impl LinExpr {
    fn var(v: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, 1);
        LinExpr { coeffs, constant: 0 }
    }

    fn lit(c: i64) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    fn add(mut self, other: &LinExpr) -> Self {
        for (&v, &c) in &other.coeffs {
            let entry = self.coeffs.entry(v).or_insert(0);
            *entry += c;
            if *entry == 0 {
                self.coeffs.remove(&v);
            }
        }
        self.constant += other.constant;
        self
    }

    fn scale(mut self, k: i64) -> Self {
        if k == 0 {
            return LinExpr::lit(0);
        }
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    fn sub(self, other: &LinExpr) -> Self {
        self.add(&other.clone().scale(-1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpKind {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

/// Typed boolean term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    True,
    False,
    BoolVar(usize),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    /// Right-associated implication chain, as in `(=> a b c)`.
    Implies(Vec<Term>),
    Iff(Box<Term>, Box<Term>),
    Cmp(CmpKind, LinExpr, LinExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SetLogic(String),
    /// set-option / set-info and other administrativia.
    Ignored,
    Declare(String, Sort),
    Assert(Term),
    CheckSat,
    GetModel,
    GetValue(Vec<String>),
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptError(pub String);

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ScriptError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ScriptError> {
    Err(ScriptError(msg.into()))
}

/// Declared variables in declaration order; terms refer to them by index.
#[derive(Debug, Default)]
pub struct SymbolTable {
    pub names: Vec<(String, Sort)>,
    index: BTreeMap<String, usize>,
}

impl SymbolTable {
    pub fn declare(&mut self, name: &str, sort: Sort) -> Result<usize, ScriptError> {
        if self.index.contains_key(name) {
            return err(format!("{name} is declared twice"));
        }
        let id = self.names.len();
        self.names.push((name.to_string(), sort));
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<(usize, Sort)> {
        self.index.get(name).map(|&i| (i, self.names[i].1))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Parses one command, updating the symbol table on declarations.
pub fn command(sexpr: &Sexpr, symbols: &mut SymbolTable) -> Result<Command, ScriptError> {
    let Some(items) = sexpr.as_list() else {
        return err(format!("expected a command, got {sexpr}"));
    };
    let Some(head) = items.first().and_then(Sexpr::as_sym) else {
        return err(format!("expected a command, got {sexpr}"));
    };
    match head {
        "set-logic" => {
            let logic = items.get(1).and_then(Sexpr::as_sym).unwrap_or("");
            Ok(Command::SetLogic(logic.to_string()))
        }
        "set-option" | "set-info" => Ok(Command::Ignored),
        "declare-const" => {
            let [_, Sexpr::Sym(name), sort] = items else {
                return err(format!("malformed declare-const: {sexpr}"));
            };
            let sort = parse_sort(sort)?;
            symbols.declare(name, sort)?;
            Ok(Command::Declare(name.clone(), sort))
        }
        "declare-fun" => {
            let [_, Sexpr::Sym(name), Sexpr::List(args), sort] = items else {
                return err(format!("malformed declare-fun: {sexpr}"));
            };
            if !args.is_empty() {
                return err("only zero-arity declare-fun is supported");
            }
            let sort = parse_sort(sort)?;
            symbols.declare(name, sort)?;
            Ok(Command::Declare(name.clone(), sort))
        }
        "assert" => {
            let [_, body] = items else {
                return err(format!("malformed assert: {sexpr}"));
            };
            Ok(Command::Assert(bool_term(body, symbols)?))
        }
        "check-sat" => Ok(Command::CheckSat),
        "get-model" => Ok(Command::GetModel),
        "get-value" => {
            let [_, Sexpr::List(vars)] = items else {
                return err(format!("malformed get-value: {sexpr}"));
            };
            let mut names = Vec::new();
            for v in vars {
                match v.as_sym() {
                    Some(s) => names.push(s.to_string()),
                    None => return err("get-value supports plain variables only"),
                }
            }
            Ok(Command::GetValue(names))
        }
        "exit" => Ok(Command::Exit),
        "push" | "pop" | "reset" => err(format!("incremental command {head} is not supported")),
        other => err(format!("unsupported command {other}")),
    }
}

fn parse_sort(s: &Sexpr) -> Result<Sort, ScriptError> {
    match s.as_sym() {
        Some("Bool") => Ok(Sort::Bool),
        Some("Int") => Ok(Sort::Int),
        _ => err(format!("unsupported sort {s}")),
    }
}

fn bool_term(s: &Sexpr, symbols: &SymbolTable) -> Result<Term, ScriptError> {
    match s {
        Sexpr::Sym(name) => match name.as_str() {
            "true" => Ok(Term::True),
            "false" => Ok(Term::False),
            _ => match symbols.lookup(name) {
                Some((id, Sort::Bool)) => Ok(Term::BoolVar(id)),
                Some((_, Sort::Int)) => err(format!("{name} is an Int, expected a Bool")),
                None => err(format!("unknown symbol {name}")),
            },
        },
        Sexpr::Int(_) => err("expected a boolean term, got a numeral"),
        Sexpr::List(items) => {
            let Some(head) = items.first().and_then(Sexpr::as_sym) else {
                return err(format!("expected an operator, got {s}"));
            };
            let args = &items[1..];
            match head {
                "not" => {
                    let [a] = args else { return err("not takes one argument") };
                    Ok(Term::Not(Box::new(bool_term(a, symbols)?)))
                }
                "and" => Ok(Term::And(bool_terms(args, symbols)?)),
                "or" => Ok(Term::Or(bool_terms(args, symbols)?)),
                "=>" => {
                    if args.len() < 2 {
                        return err("=> takes at least two arguments");
                    }
                    Ok(Term::Implies(bool_terms(args, symbols)?))
                }
                "=" => {
                    let [a, b] = args else { return err("only binary = is supported") };
                    if is_bool_expr(a, symbols) {
                        Ok(Term::Iff(Box::new(bool_term(a, symbols)?), Box::new(bool_term(b, symbols)?)))
                    } else {
                        cmp(CmpKind::Eq, int_expr(a, symbols)?, int_expr(b, symbols)?)
                    }
                }
                "distinct" => {
                    let [a, b] = args else { return err("only binary distinct is supported") };
                    let eq = cmp(CmpKind::Eq, int_expr(a, symbols)?, int_expr(b, symbols)?)?;
                    Ok(Term::Not(Box::new(eq)))
                }
                "<=" | "<" | ">=" | ">" => {
                    let [a, b] = args else { return err("comparisons are binary") };
                    let kind = match head {
                        "<=" => CmpKind::Le,
                        "<" => CmpKind::Lt,
                        ">=" => CmpKind::Ge,
                        _ => CmpKind::Gt,
                    };
                    cmp(kind, int_expr(a, symbols)?, int_expr(b, symbols)?)
                }
                other => err(format!("unsupported operator {other}")),
            }
        }
    }
}

fn bool_terms(args: &[Sexpr], symbols: &SymbolTable) -> Result<Vec<Term>, ScriptError> {
    args.iter().map(|a| bool_term(a, symbols)).collect()
}

/// Builds a comparison, enforcing the supported fragment: the difference of
/// the two sides must involve at most one positive and one negative variable,
/// both with unit coefficient.
fn cmp(kind: CmpKind, l: LinExpr, r: LinExpr) -> Result<Term, ScriptError> {
    let d = l.clone().sub(&r);
    let mut pos = 0usize;
    let mut neg = 0usize;
    for &c in d.coeffs.values() {
        match c {
            1 => pos += 1,
            -1 => neg += 1,
            _ => return err("only unit coefficients are supported in comparisons"),
        }
    }
    if pos > 1 || neg > 1 {
        return err("comparisons must reduce to a difference of at most two variables");
    }
    Ok(Term::Cmp(kind, l, r))
}

fn is_bool_expr(s: &Sexpr, symbols: &SymbolTable) -> bool {
    match s {
        Sexpr::Sym(name) => {
            matches!(name.as_str(), "true" | "false")
                || matches!(symbols.lookup(name), Some((_, Sort::Bool)))
        }
        Sexpr::Int(_) => false,
        Sexpr::List(items) => matches!(
            items.first().and_then(Sexpr::as_sym),
            Some("not" | "and" | "or" | "=>" | "=" | "distinct" | "<=" | "<" | ">=" | ">")
        ),
    }
}

fn int_expr(s: &Sexpr, symbols: &SymbolTable) -> Result<LinExpr, ScriptError> {
    match s {
        Sexpr::Int(c) => Ok(LinExpr::lit(*c)),
        Sexpr::Sym(name) => match symbols.lookup(name) {
            Some((id, Sort::Int)) => Ok(LinExpr::var(id)),
            Some((_, Sort::Bool)) => err(format!("{name} is a Bool, expected an Int")),
            None => err(format!("unknown symbol {name}")),
        },
        Sexpr::List(items) => {
            let Some(head) = items.first().and_then(Sexpr::as_sym) else {
                return err(format!("expected an arithmetic operator, got {s}"));
            };
            let args = &items[1..];
            match head {
                "+" => {
                    let mut acc = LinExpr::lit(0);
                    for a in args {
                        acc = acc.add(&int_expr(a, symbols)?);
                    }
                    Ok(acc)
                }
                "-" => match args {
                    [a] => Ok(int_expr(a, symbols)?.scale(-1)),
                    [first, rest @ ..] => {
                        let mut acc = int_expr(first, symbols)?;
                        for a in rest {
                            acc = acc.sub(&int_expr(a, symbols)?);
                        }
                        Ok(acc)
                    }
                    [] => err("- takes at least one argument"),
                },
                "*" => {
                    let [a, b] = args else { return err("* is binary") };
                    let a = int_expr(a, symbols)?;
                    let b = int_expr(b, symbols)?;
                    if a.coeffs.is_empty() {
                        Ok(b.scale(a.constant))
                    } else if b.coeffs.is_empty() {
                        Ok(a.scale(b.constant))
                    } else {
                        err("non-linear multiplication is not supported")
                    }
                }
                other => err(format!("unsupported arithmetic operator {other}")),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_all;

    fn setup(decls: &[(&str, Sort)]) -> SymbolTable {
        let mut st = SymbolTable::default();
        for (n, s) in decls {
            st.declare(n, *s).unwrap();
        }
        st
    }

    fn term(input: &str, st: &SymbolTable) -> Result<Term, ScriptError> {
        let sexprs = parse_all(input).unwrap();
        bool_term(&sexprs[0], st)
    }

    #[test]
    fn parses_difference_comparison() {
        let st = setup(&[("x", Sort::Int), ("y", Sort::Int)]);
        let t = term("(<= (- x y) 5)", &st).unwrap();
        let Term::Cmp(CmpKind::Le, lhs, rhs) = t else { panic!("{t:?}") };
        assert_eq!(lhs.coeffs.len(), 2);
        assert_eq!(rhs, LinExpr::lit(5));
    }

    #[test]
    fn equality_dispatches_on_sort() {
        let st = setup(&[("x", Sort::Int), ("p", Sort::Bool)]);
        assert!(matches!(term("(= x 3)", &st).unwrap(), Term::Cmp(CmpKind::Eq, ..)));
        assert!(matches!(term("(= p true)", &st).unwrap(), Term::Iff(..)));
    }

    #[test]
    fn rejects_unknown_symbols_and_nonlinear_terms() {
        let st = setup(&[("x", Sort::Int)]);
        assert!(term("(<= nope 3)", &st).is_err());
        assert!(term("(<= (* x x) 3)", &st).is_err());
    }

    #[test]
    fn command_stream_declares_and_asserts() {
        let mut st = SymbolTable::default();
        let script = "(set-logic QF_LIA)(declare-const x Int)(assert (< x 7))(check-sat)(get-model)";
        let cmds: Vec<Command> = parse_all(script)
            .unwrap()
            .iter()
            .map(|s| command(s, &mut st).unwrap())
            .collect();
        assert_eq!(cmds.len(), 5);
        assert!(matches!(cmds[1], Command::Declare(..)));
        assert!(matches!(cmds[4], Command::GetModel));
    }

    #[test]
    fn duplicate_declarations_error() {
        let mut st = SymbolTable::default();
        let sexprs = parse_all("(declare-const x Int)(declare-const x Int)").unwrap();
        assert!(command(&sexprs[0], &mut st).is_ok());
        assert!(command(&sexprs[1], &mut st).is_err());
    }
}
