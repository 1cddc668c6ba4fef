//! Frontend for the supported ANML subset. Parsing is total: any input
//! yields either a full [`Problem`] or a list of diagnostics with source
//! spans, never a partial problem and never a panic.
//!
//! The grammar (documented with examples in `docs/anml.md`) covers: object
//! enumeration and integer range types, fluent declarations, action blocks
//! with typed parameters, a fixed or bounded duration, temporally annotated
//! conditions (`==`) and effects (`:=`), top-level facts and goals, free
//! goal variables, and comparison / membership constraints.

use std::collections::HashMap;
use std::fmt;

use tempo_core::model::TIME_TYPE;
use tempo_core::{
    ActionTemplate, Chronicle, ChronicleOrigin, CmpOp, Condition, Constraint, Effect,
    FluentSignature, Problem, StateVarRef, Term, TypeDef, TypeId, TypeKind, VarId, VarOrigin,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl SourceSpan {
    fn zero() -> Self {
        SourceSpan { start: 0, end: 0, line: 1, col: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.span.line, self.span.col, self.message)
    }
}

/// Parses an ANML-subset source into a problem, or all the diagnostics the
/// parser could collect.
pub fn parse_problem(text: &str) -> Result<Problem, Vec<ParseDiagnostic>> {
    let tokens = match lex(text) {
        Ok(t) => t,
        Err(d) => return Err(vec![d]),
    };
    let mut parser = Parser::new(tokens);
    parser.parse();
    if parser.diagnostics.is_empty() {
        // internal consistency gate; the parser's own checks should make
        // this unreachable
        let residual = tempo_core::validate_problem(&parser.builder.problem);
        if !residual.is_empty() {
            return Err(residual
                .into_iter()
                .map(|d| ParseDiagnostic {
                    severity: Severity::Error,
                    message: d.to_string(),
                    span: SourceSpan::zero(),
                })
                .collect());
        }
        Ok(parser.builder.problem)
    } else {
        Err(parser.diagnostics)
    }
}

/// Canonical JSON rendering of a problem (stable key order, two-space
/// indentation, trailing newline). Round-trips through [`problem_from_json`].
pub fn problem_to_json(p: &Problem) -> String {
    let mut s = serde_json::to_string_pretty(p).expect("problem serializes");
    s.push('\n');
    s
}

pub fn problem_from_json(text: &str) -> Result<Problem, serde_json::Error> {
    serde_json::from_str(text)
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Plus,
    Minus,
    Assign,  // :=
    InRange, // :in
    EqEq,
    NotEq,
    Le,
    Ge,
    Lt,
    Gt,
    Eq, // =
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Int(i) => write!(f, "'{i}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semi => f.write_str("';'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Assign => f.write_str("':='"),
            Tok::InRange => f.write_str("':in'"),
            Tok::EqEq => f.write_str("'=='"),
            Tok::NotEq => f.write_str("'!='"),
            Tok::Le => f.write_str("'<='"),
            Tok::Ge => f.write_str("'>='"),
            Tok::Lt => f.write_str("'<'"),
            Tok::Gt => f.write_str("'>'"),
            Tok::Eq => f.write_str("'='"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseDiagnostic> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! span_here {
        ($start:expr, $scol:expr) => {
            SourceSpan { start: $start, end: pos, line, col: $scol }
        };
    }

    while pos < bytes.len() {
        let c = bytes[pos];
        match c {
            b' ' | b'\t' | b'\r' => {
                pos += 1;
                col += 1;
            }
            b'\n' => {
                pos += 1;
                line += 1;
                col = 1;
            }
            b'/' if bytes.get(pos + 1) == Some(&b'/') => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            _ => {
                let start = pos;
                let scol = col;
                let tok = match c {
                    b'(' => {
                        pos += 1;
                        Tok::LParen
                    }
                    b')' => {
                        pos += 1;
                        Tok::RParen
                    }
                    b'{' => {
                        pos += 1;
                        Tok::LBrace
                    }
                    b'}' => {
                        pos += 1;
                        Tok::RBrace
                    }
                    b'[' => {
                        pos += 1;
                        Tok::LBracket
                    }
                    b']' => {
                        pos += 1;
                        Tok::RBracket
                    }
                    b',' => {
                        pos += 1;
                        Tok::Comma
                    }
                    b';' => {
                        pos += 1;
                        Tok::Semi
                    }
                    b'+' => {
                        pos += 1;
                        Tok::Plus
                    }
                    b'-' => {
                        pos += 1;
                        Tok::Minus
                    }
                    b':' => {
                        if bytes.get(pos + 1) == Some(&b'=') {
                            pos += 2;
                            Tok::Assign
                        } else if bytes[pos + 1..].starts_with(b"in") {
                            pos += 3;
                            Tok::InRange
                        } else {
                            pos += 1;
                            return Err(ParseDiagnostic {
                                severity: Severity::Error,
                                message: "expected ':=' or ':in'".into(),
                                span: span_here!(start, scol),
                            });
                        }
                    }
                    b'=' => {
                        if bytes.get(pos + 1) == Some(&b'=') {
                            pos += 2;
                            Tok::EqEq
                        } else {
                            pos += 1;
                            Tok::Eq
                        }
                    }
                    b'!' => {
                        if bytes.get(pos + 1) == Some(&b'=') {
                            pos += 2;
                            Tok::NotEq
                        } else {
                            pos += 1;
                            return Err(ParseDiagnostic {
                                severity: Severity::Error,
                                message: "expected '!='".into(),
                                span: span_here!(start, scol),
                            });
                        }
                    }
                    b'<' => {
                        if bytes.get(pos + 1) == Some(&b'=') {
                            pos += 2;
                            Tok::Le
                        } else {
                            pos += 1;
                            Tok::Lt
                        }
                    }
                    b'>' => {
                        if bytes.get(pos + 1) == Some(&b'=') {
                            pos += 2;
                            Tok::Ge
                        } else {
                            pos += 1;
                            Tok::Gt
                        }
                    }
                    b'0'..=b'9' => {
                        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                            pos += 1;
                        }
                        let s = &text[start..pos];
                        match s.parse::<i64>() {
                            Ok(i) => Tok::Int(i),
                            Err(_) => {
                                return Err(ParseDiagnostic {
                                    severity: Severity::Error,
                                    message: format!("integer literal {s} out of range"),
                                    span: span_here!(start, scol),
                                })
                            }
                        }
                    }
                    c if c.is_ascii_alphabetic() || c == b'_' => {
                        while pos < bytes.len()
                            && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_')
                        {
                            pos += 1;
                        }
                        Tok::Ident(text[start..pos].to_string())
                    }
                    other => {
                        pos += 1;
                        return Err(ParseDiagnostic {
                            severity: Severity::Error,
                            message: format!("unexpected character '{}'", other as char),
                            span: span_here!(start, scol),
                        });
                    }
                };
                let width = (pos - start) as u32;
                out.push(Spanned { tok, span: SourceSpan { start, end: pos, line, col: scol } });
                col = scol + width;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// builder: symbol tables around the core Problem

struct Builder {
    problem: Problem,
    types: HashMap<String, TypeId>,
    constants: HashMap<String, (TypeId, i64)>,
    fluents: HashMap<String, u32>,
    /// top-level declared variables (goal timepoints and goal variables)
    globals: HashMap<String, VarId>,
    /// per-constant bound variable in the initial chronicle
    const_vars: HashMap<String, VarId>,
    /// per-instant bound timepoint in the initial chronicle
    instant_vars: HashMap<i64, VarId>,
}

impl Builder {
    fn new() -> Self {
        let problem = Problem::new();
        let mut types = HashMap::new();
        types.insert("time".to_string(), TIME_TYPE);
        Builder {
            problem,
            types,
            constants: HashMap::new(),
            fluents: HashMap::new(),
            globals: HashMap::new(),
            const_vars: HashMap::new(),
            instant_vars: HashMap::new(),
        }
    }

    fn name_taken(&self, name: &str) -> bool {
        self.types.contains_key(name)
            || self.constants.contains_key(name)
            || self.fluents.contains_key(name)
            || self.problem.templates.iter().any(|t| t.name == name)
    }

    /// Bound variable standing for an object constant in the initial chronicle.
    fn const_var(&mut self, name: &str) -> Option<VarId> {
        if let Some(&v) = self.const_vars.get(name) {
            return Some(v);
        }
        let &(ty, ord) = self.constants.get(name)?;
        let v = self.problem.variables.fresh(ty, name, VarOrigin::Initial, Some(ord));
        self.problem.initial.vars.push(v);
        self.const_vars.insert(name.to_string(), v);
        Some(v)
    }

    /// Bound timepoint standing for an absolute instant in the initial chronicle.
    fn instant_var(&mut self, at: i64) -> VarId {
        if let Some(&v) = self.instant_vars.get(&at) {
            return v;
        }
        let v = self.problem.variables.fresh(TIME_TYPE, format!("_{at}"), VarOrigin::Initial, Some(at));
        self.problem.initial.vars.push(v);
        self.instant_vars.insert(at, v);
        v
    }
}

// ---------------------------------------------------------------------------
// parser

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    diagnostics: Vec<ParseDiagnostic>,
    builder: Builder,
}

/// Where identifiers resolve while parsing statements.
struct ActionScope {
    origin: String,
    params: HashMap<String, VarId>,
    start: VarId,
    end: VarId,
    vars: Vec<VarId>,
    constraints: Vec<Constraint>,
    conditions: Vec<Condition>,
    effects: Vec<Effect>,
    /// bound variables for constants used inside this action
    const_vars: HashMap<String, VarId>,
    /// derived timepoints `start + n`
    offset_vars: HashMap<i64, VarId>,
    duration_seen: bool,
}

#[derive(Debug, Clone, Copy)]
enum TimeRef {
    Start,
    End,
    All,
    At(i64),
    Named(VarId),
}

struct Unwind;

type Step<T> = Result<T, Unwind>;

impl Parser {
    fn new(tokens: Vec<Spanned>) -> Self {
        Parser { tokens, pos: 0, diagnostics: Vec::new(), builder: Builder::new() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn span(&self) -> SourceSpan {
        self.tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|s| s.span)
            .unwrap_or_else(SourceSpan::zero)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, message: impl Into<String>) -> Unwind {
        self.error_at(self.span(), message)
    }

    fn error_at(&mut self, span: SourceSpan, message: impl Into<String>) -> Unwind {
        self.diagnostics.push(ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
        });
        Unwind
    }

    fn expect(&mut self, tok: Tok) -> Step<()> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.bump();
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {tok}, found {t}");
                Err(self.error(msg))
            }
            None => {
                let msg = format!("expected {tok}, found end of input");
                Err(self.error(msg))
            }
        }
    }

    fn ident(&mut self, what: &str) -> Step<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.bump();
                Ok(s)
            }
            other => {
                let msg = match other {
                    Some(t) => format!("expected {what}, found {t}"),
                    None => format!("expected {what}, found end of input"),
                };
                Err(self.error(msg))
            }
        }
    }

    fn int(&mut self) -> Step<i64> {
        let negative = matches!(self.peek(), Some(Tok::Minus));
        if negative {
            self.bump();
        }
        match self.peek().cloned() {
            Some(Tok::Int(i)) => {
                self.bump();
                Ok(if negative { -i } else { i })
            }
            _ => Err(self.error("expected an integer")),
        }
    }

    /// Skips to just past the next ';' (or past a closing '}') so parsing
    /// can continue after an error.
    fn synchronize(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            match t {
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::LBrace => {
                    depth += 1;
                    self.bump();
                }
                Tok::RBrace => {
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                    depth -= 1;
                    self.bump();
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn parse(&mut self) {
        while self.peek().is_some() {
            let before = self.pos;
            if self.item().is_err() {
                self.synchronize();
            }
            if self.pos == before {
                // safety against non-advancing loops
                self.bump();
            }
        }
    }

    fn item(&mut self) -> Step<()> {
        match self.peek().cloned() {
            Some(Tok::Ident(kw)) => match kw.as_str() {
                "type" => self.type_decl(),
                "fluent" | "function" => self.fluent_decl(),
                "action" => self.action_decl(),
                "timepoint" | "var" => {
                    self.top_var_decl()?;
                    Ok(())
                }
                "goal" => self.goal(),
                _ => self.top_statement(),
            },
            Some(Tok::LBracket) => self.top_statement(),
            Some(Tok::Semi) => {
                self.bump();
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected a declaration or statement, found {t}");
                Err(self.error(msg))
            }
            None => Ok(()),
        }
    }

    fn type_decl(&mut self) -> Step<()> {
        let kw_span = self.span();
        self.bump(); // type
        let name = self.ident("a type name")?;
        if self.builder.name_taken(&name) || name == "time" {
            return Err(self.error_at(kw_span, format!("name {name} is already in use")));
        }
        self.expect(Tok::Eq)?;
        let kind = match self.peek().cloned() {
            Some(Tok::LBrace) => {
                self.bump();
                let mut members = Vec::new();
                loop {
                    let mspan = self.span();
                    let member = self.ident("an object constant")?;
                    if self.builder.name_taken(&member) {
                        return Err(self.error_at(mspan, format!("name {member} is already in use")));
                    }
                    if members.contains(&member) {
                        return Err(self.error_at(mspan, format!("duplicate member {member}")));
                    }
                    members.push(member);
                    match self.bump() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RBrace) => break,
                        _ => return Err(self.error("expected ',' or '}' in the member list")),
                    }
                }
                TypeKind::Objects(members)
            }
            Some(Tok::Ident(i)) if i == "int" => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let lo = self.int()?;
                self.expect(Tok::Comma)?;
                let hi = self.int()?;
                self.expect(Tok::RBracket)?;
                if lo > hi {
                    return Err(self.error_at(kw_span, format!("empty integer range [{lo}, {hi}]")));
                }
                TypeKind::IntRange(lo, hi)
            }
            _ => return Err(self.error("expected '{' or 'int' after '='")),
        };
        self.expect(Tok::Semi)?;

        let id = TypeId(self.builder.problem.types.len() as u32);
        if let TypeKind::Objects(members) = &kind {
            for (i, m) in members.iter().enumerate() {
                self.builder.constants.insert(m.clone(), (id, i as i64));
            }
        }
        self.builder.problem.types.push(TypeDef { name: name.clone(), kind });
        self.builder.types.insert(name, id);
        Ok(())
    }

    fn fluent_decl(&mut self) -> Step<()> {
        self.bump(); // fluent | function
        let vspan = self.span();
        let value_ty_name = self.ident("a value type")?;
        let Some(&value_type) = self.builder.types.get(&value_ty_name) else {
            return Err(self.error_at(vspan, format!("unknown type {value_ty_name}")));
        };
        let nspan = self.span();
        let name = self.ident("a fluent name")?;
        if self.builder.name_taken(&name) {
            return Err(self.error_at(nspan, format!("name {name} is already in use")));
        }
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let pspan = self.span();
                let ty_name = self.ident("a parameter type")?;
                let Some(&ty) = self.builder.types.get(&ty_name) else {
                    return Err(self.error_at(pspan, format!("unknown type {ty_name}")));
                };
                // optional parameter name, purely documentary
                if matches!(self.peek(), Some(Tok::Ident(_))) {
                    self.bump();
                }
                params.push(ty);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                    }
                    _ => break,
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Semi)?;

        self.builder.fluents.insert(name.clone(), self.builder.problem.fluents.len() as u32);
        self.builder.problem.fluents.push(FluentSignature { name, params, value_type });
        Ok(())
    }

    fn top_var_decl(&mut self) -> Step<VarId> {
        let kw = self.ident("a declaration")?;
        let (ty, label_what) = if kw == "timepoint" {
            (TIME_TYPE, "a timepoint name")
        } else {
            let tspan = self.span();
            let ty_name = self.ident("a type name")?;
            let Some(&ty) = self.builder.types.get(&ty_name) else {
                return Err(self.error_at(tspan, format!("unknown type {ty_name}")));
            };
            (ty, "a variable name")
        };
        let nspan = self.span();
        let name = self.ident(label_what)?;
        if self.builder.globals.contains_key(&name) || self.builder.name_taken(&name) {
            return Err(self.error_at(nspan, format!("name {name} is already in use")));
        }
        self.expect(Tok::Semi)?;
        let v = self.builder.problem.variables.fresh(ty, &name, VarOrigin::Initial, None);
        self.builder.problem.initial.vars.push(v);
        self.builder.globals.insert(name, v);
        Ok(v)
    }

    fn action_decl(&mut self) -> Step<()> {
        self.bump(); // action
        let nspan = self.span();
        let name = self.ident("an action name")?;
        if self.builder.name_taken(&name) || self.builder.globals.contains_key(&name) {
            return Err(self.error_at(nspan, format!("name {name} is already in use")));
        }
        self.expect(Tok::LParen)?;

        let origin = VarOrigin::Template(name.clone());
        let mut scope = ActionScope {
            origin: name.clone(),
            params: HashMap::new(),
            start: VarId(0), // placeholders, set below
            end: VarId(0),
            vars: Vec::new(),
            constraints: Vec::new(),
            conditions: Vec::new(),
            effects: Vec::new(),
            const_vars: HashMap::new(),
            offset_vars: HashMap::new(),
            duration_seen: false,
        };

        let mut param_ids = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let tspan = self.span();
                let ty_name = self.ident("a parameter type")?;
                let Some(&ty) = self.builder.types.get(&ty_name) else {
                    return Err(self.error_at(tspan, format!("unknown type {ty_name}")));
                };
                let pspan = self.span();
                let pname = self.ident("a parameter name")?;
                if scope.params.contains_key(&pname) || pname == "start" || pname == "end" {
                    return Err(self.error_at(pspan, format!("parameter {pname} is already in use")));
                }
                let v = self.builder.problem.variables.fresh(ty, &pname, origin.clone(), None);
                scope.vars.push(v);
                scope.params.insert(pname, v);
                param_ids.push(v);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                    }
                    _ => break,
                }
            }
        }
        self.expect(Tok::RParen)?;

        scope.start = self.builder.problem.variables.fresh(TIME_TYPE, "start", origin.clone(), None);
        scope.end = self.builder.problem.variables.fresh(TIME_TYPE, "end", origin.clone(), None);
        scope.vars.push(scope.start);
        scope.vars.push(scope.end);
        // actions span a well-formed interval
        scope.constraints.push(Constraint::le_vars(scope.start, scope.end));

        self.expect(Tok::LBrace)?;
        while self.peek() != Some(&Tok::RBrace) {
            if self.peek().is_none() {
                return Err(self.error("unclosed action block"));
            }
            if self.action_item(&mut scope).is_err() {
                self.synchronize_in_block();
            }
        }
        self.bump(); // }
        if self.peek() == Some(&Tok::Semi) {
            self.bump();
        }

        let chronicle = Chronicle {
            origin: ChronicleOrigin::Template(name.clone()),
            vars: scope.vars.clone(),
            constraints: scope.constraints.clone(),
            conditions: scope.conditions.clone(),
            effects: scope.effects.clone(),
            start: Some(scope.start),
        };
        self.builder.problem.templates.push(ActionTemplate {
            name,
            params: param_ids,
            start: scope.start,
            end: scope.end,
            chronicle,
        });
        Ok(())
    }

    /// Error recovery inside an action or goal block: skip past the next ';'
    /// without crossing the closing '}'.
    fn synchronize_in_block(&mut self) {
        while let Some(t) = self.peek() {
            match t {
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn action_item(&mut self, scope: &mut ActionScope) -> Step<()> {
        match self.peek().cloned() {
            Some(Tok::Ident(kw)) if kw == "duration" => {
                let dspan = self.span();
                self.bump();
                if scope.duration_seen {
                    return Err(self.error_at(dspan, "duplicate duration declaration"));
                }
                scope.duration_seen = true;
                match self.bump() {
                    Some(Tok::Assign) => {
                        let d = self.int()?;
                        if d < 0 {
                            return Err(self.error_at(dspan, "durations must be non-negative"));
                        }
                        scope.constraints.push(Constraint::eq_offset(scope.end, scope.start, d));
                    }
                    Some(Tok::InRange) => {
                        self.expect(Tok::LBracket)?;
                        let lo = self.int()?;
                        self.expect(Tok::Comma)?;
                        let hi = self.int()?;
                        self.expect(Tok::RBracket)?;
                        if lo < 0 || lo > hi {
                            return Err(self.error_at(dspan, format!("invalid duration range [{lo}, {hi}]")));
                        }
                        // start + lo <= end <= start + hi
                        scope.constraints.push(Constraint::atom(
                            Term::Var(scope.start),
                            CmpOp::Le,
                            Term::Var(scope.end),
                            -lo,
                        ));
                        scope.constraints.push(Constraint::atom(
                            Term::Var(scope.end),
                            CmpOp::Le,
                            Term::Var(scope.start),
                            hi,
                        ));
                    }
                    _ => return Err(self.error("expected ':=' or ':in' after duration")),
                }
                self.expect(Tok::Semi)
            }
            Some(Tok::LBracket) => {
                let (a, b) = self.annotation(Some(scope))?;
                self.sv_statement(Some(scope), a, b)
            }
            _ => {
                let c = self.constraint_expr(Some(scope))?;
                self.expect(Tok::Semi)?;
                scope.constraints.push(c);
                Ok(())
            }
        }
    }

    /// `[t]`, `[t1, t2]` or `[all]`, resolved against the scope.
    fn annotation(&mut self, scope: Option<&mut ActionScope>) -> Step<(VarId, VarId)> {
        self.expect(Tok::LBracket)?;
        // the scope reference must be reusable for both timerefs
        let mut scope = scope;
        let first = self.timeref(scope.as_deref_mut())?;
        let second = match self.peek() {
            Some(Tok::Comma) => {
                self.bump();
                Some(self.timeref(scope.as_deref_mut())?)
            }
            _ => None,
        };
        self.expect(Tok::RBracket)?;

        let resolve = |tr: TimeRef, this: &mut Self, scope: &mut Option<&mut ActionScope>| -> Step<VarId> {
            match tr {
                TimeRef::Start => match scope {
                    Some(s) => Ok(s.start),
                    None => Err(this.error("'start' is only meaningful inside an action")),
                },
                TimeRef::End => match scope {
                    Some(s) => Ok(s.end),
                    None => Err(this.error("'end' is only meaningful inside an action")),
                },
                TimeRef::All => Err(this.error("'all' cannot be combined in a pair")),
                TimeRef::At(n) => match scope {
                    Some(s) => Ok(this.offset_timepoint(s, n)),
                    None => Ok(self_instant(this, n)),
                },
                TimeRef::Named(v) => Ok(v),
            }
        };

        match (first, second) {
            (TimeRef::All, None) => match &mut scope {
                Some(s) => Ok((s.start, s.end)),
                None => Err(self.error("'all' is only meaningful inside an action")),
            },
            (f, None) => {
                let v = resolve(f, self, &mut scope)?;
                Ok((v, v))
            }
            (f, Some(s2)) => {
                let a = resolve(f, self, &mut scope)?;
                let b = resolve(s2, self, &mut scope)?;
                Ok((a, b))
            }
        }
    }

    fn timeref(&mut self, scope: Option<&mut ActionScope>) -> Step<TimeRef> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.bump();
                Ok(TimeRef::At(n))
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "start" => {
                    self.bump();
                    Ok(TimeRef::Start)
                }
                "end" => {
                    self.bump();
                    Ok(TimeRef::End)
                }
                "all" => {
                    self.bump();
                    Ok(TimeRef::All)
                }
                _ => {
                    let span = self.span();
                    self.bump();
                    if scope.is_some() {
                        return Err(self.error_at(
                            span,
                            format!("named timepoints like {name} are not supported inside actions"),
                        ));
                    }
                    match self.builder.globals.get(&name) {
                        Some(&v) if self.builder.problem.variables.get(v).ty == TIME_TYPE => {
                            Ok(TimeRef::Named(v))
                        }
                        Some(_) => Err(self.error_at(span, format!("{name} is not a timepoint"))),
                        None => Err(self.error_at(span, format!("unknown timepoint {name}"))),
                    }
                }
            },
            _ => Err(self.error("expected a timepoint")),
        }
    }

    /// Timepoint at a fixed offset from an action's start, shared per offset.
    fn offset_timepoint(&mut self, scope: &mut ActionScope, n: i64) -> VarId {
        if let Some(&v) = scope.offset_vars.get(&n) {
            return v;
        }
        let v = self.builder.problem.variables.fresh(
            TIME_TYPE,
            format!("at{n}"),
            VarOrigin::Template(scope.origin.clone()),
            None,
        );
        scope.vars.push(v);
        scope.constraints.push(Constraint::eq_offset(v, scope.start, n));
        scope.offset_vars.insert(n, v);
        v
    }

    /// `fluent(args) == value ;` or `fluent(args) := value ;`
    fn sv_statement(&mut self, mut scope: Option<&mut ActionScope>, start: VarId, end: VarId) -> Step<()> {
        let fspan = self.span();
        let fname = self.ident("a fluent name")?;
        let Some(&fid) = self.builder.fluents.get(&fname) else {
            return Err(self.error_at(fspan, format!("unknown fluent {fname}")));
        };
        let signature = self.builder.problem.fluents[fid as usize].clone();
        self.expect(Tok::LParen)?;
        let mut arg_vars = Vec::new();
        let mut extra_args = 0usize;
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let span = self.span();
                let name = self.ident("an argument")?;
                match signature.params.get(arg_vars.len() + extra_args) {
                    Some(&expected) => {
                        let v = self.resolve_value(&name, span, scope.as_deref_mut())?;
                        self.check_var_type(v, expected, span, &name)?;
                        arg_vars.push(v);
                    }
                    None => extra_args += 1,
                }
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                    }
                    _ => break,
                }
            }
        }
        self.expect(Tok::RParen)?;
        if extra_args > 0 || arg_vars.len() != signature.params.len() {
            return Err(self.error_at(
                fspan,
                format!(
                    "{fname} takes {} arguments, found {}",
                    signature.params.len(),
                    arg_vars.len() + extra_args
                ),
            ));
        }
        let op = match self.bump() {
            Some(Tok::EqEq) => StatementOp::Condition,
            Some(Tok::Assign) => StatementOp::Effect,
            _ => return Err(self.error("expected '==' (condition) or ':=' (effect)")),
        };
        let vspan = self.span();
        let value_name = self.ident("a value")?;
        let value = self.resolve_value(&value_name, vspan, scope.as_deref_mut())?;
        self.check_var_type(value, signature.value_type, vspan, &value_name)?;
        self.expect(Tok::Semi)?;

        let sv = StateVarRef { fluent: tempo_core::FluentId(fid), args: arg_vars };
        match (op, scope) {
            (StatementOp::Condition, Some(s)) => {
                s.conditions.push(Condition { start, end, sv, value });
            }
            (StatementOp::Effect, Some(s)) => {
                s.effects.push(Effect { start, end, sv, value });
            }
            (StatementOp::Condition, None) => {
                self.builder.problem.initial.conditions.push(Condition { start, end, sv, value });
            }
            (StatementOp::Effect, None) => {
                self.builder.problem.initial.effects.push(Effect { start, end, sv, value });
            }
        }
        Ok(())
    }

    /// Resolves an identifier in value position: parameter or constant inside
    /// actions; declared variable or constant at top level.
    fn resolve_value(&mut self, name: &str, span: SourceSpan, scope: Option<&mut ActionScope>) -> Step<VarId> {
        match scope {
            Some(s) => {
                if let Some(&v) = s.params.get(name) {
                    return Ok(v);
                }
                if let Some(&v) = s.const_vars.get(name) {
                    return Ok(v);
                }
                if let Some(&(ty, ord)) = self.builder.constants.get(name) {
                    let v = self.builder.problem.variables.fresh(
                        ty,
                        name,
                        VarOrigin::Template(s.origin.clone()),
                        Some(ord),
                    );
                    s.vars.push(v);
                    s.const_vars.insert(name.to_string(), v);
                    return Ok(v);
                }
                Err(self.error_at(span, format!("unknown identifier {name}")))
            }
            None => {
                if let Some(&v) = self.builder.globals.get(name) {
                    return Ok(v);
                }
                match self.builder.const_var(name) {
                    Some(v) => Ok(v),
                    None => Err(self.error_at(span, format!("unknown identifier {name}"))),
                }
            }
        }
    }

    fn check_var_type(&mut self, v: VarId, expected: TypeId, span: SourceSpan, name: &str) -> Step<()> {
        let actual = self.builder.problem.variables.get(v).ty;
        if actual != expected {
            let expected_name = self.builder.problem.types[expected.0 as usize].name.clone();
            return Err(self.error_at(span, format!("{name} does not have type {expected_name}")));
        }
        Ok(())
    }

    fn top_statement(&mut self) -> Step<()> {
        // fact or condition, with optional annotation; or a bare constraint
        if self.peek() == Some(&Tok::LBracket) {
            let (a, b) = self.annotation(None)?;
            return self.sv_statement(None, a, b);
        }
        // distinguish `f(x) := v;` from a bare constraint like `t < 100;`
        let snapshot = self.pos;
        if let Some(Tok::Ident(_)) = self.peek() {
            if self.tokens.get(self.pos + 1).map(|s| &s.tok) == Some(&Tok::LParen) {
                let zero = self.builder.instant_var(0);
                let before = self.builder.problem.initial.conditions.len();
                self.sv_statement(None, zero, zero)?;
                if self.builder.problem.initial.conditions.len() > before {
                    let span = self.tokens[snapshot].span;
                    return Err(self.error_at(span, "top-level conditions need a time annotation"));
                }
                return Ok(());
            }
        }
        let c = self.constraint_expr(None)?;
        self.expect(Tok::Semi)?;
        self.builder.problem.initial.constraints.push(c);
        Ok(())
    }

    fn goal(&mut self) -> Step<()> {
        self.bump(); // goal
        match self.peek().cloned() {
            Some(Tok::LBrace) => {
                self.bump();
                while self.peek() != Some(&Tok::RBrace) {
                    if self.peek().is_none() {
                        return Err(self.error("unclosed goal block"));
                    }
                    let step = match self.peek().cloned() {
                        Some(Tok::Ident(kw)) if kw == "timepoint" || kw == "var" => {
                            self.top_var_decl().map(|_| ())
                        }
                        Some(Tok::LBracket) => {
                            let res = self.annotation(None);
                            match res {
                                Ok((a, b)) => self.sv_statement(None, a, b),
                                Err(e) => Err(e),
                            }
                        }
                        _ => {
                            let res = self.constraint_expr(None);
                            match res {
                                Ok(c) => {
                                    let r = self.expect(Tok::Semi);
                                    if r.is_ok() {
                                        self.builder.problem.initial.constraints.push(c);
                                    }
                                    r
                                }
                                Err(e) => Err(e),
                            }
                        }
                    };
                    if step.is_err() {
                        self.synchronize_in_block();
                    }
                }
                self.bump(); // }
                if self.peek() == Some(&Tok::Semi) {
                    self.bump();
                }
                Ok(())
            }
            Some(Tok::LBracket) => {
                let (a, b) = self.annotation(None)?;
                self.sv_statement(None, a, b)
            }
            _ => Err(self.error("expected '{' or a time annotation after goal")),
        }
    }

    /// `operand cmp operand` with optional `+ n` offsets, or `x in { .. }`.
    fn constraint_expr(&mut self, mut scope: Option<&mut ActionScope>) -> Step<Constraint> {
        let lspan = self.span();
        let (lhs, loff) = self.operand(scope.as_deref_mut())?;

        if self.peek() == Some(&Tok::InRange) || matches!(self.peek(), Some(Tok::Ident(k)) if k == "in") {
            self.bump();
            self.expect(Tok::LBrace)?;
            let Term::Var(v) = lhs else {
                return Err(self.error_at(lspan, "membership needs a variable on the left"));
            };
            if loff != 0 {
                return Err(self.error_at(lspan, "offsets are not allowed in membership"));
            }
            let var_ty = self.builder.problem.variables.get(v).ty;
            let mut members = Vec::new();
            loop {
                let mspan = self.span();
                let name = self.ident("an object constant")?;
                let member = self.resolve_value(&name, mspan, scope.as_deref_mut())?;
                self.check_var_type(member, var_ty, mspan, &name)?;
                members.push(Term::Var(member));
                match self.bump() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RBrace) => break,
                    _ => return Err(self.error("expected ',' or '}' in the member set")),
                }
            }
            return Ok(Constraint::member_of(v, members));
        }

        // >= and > swap operands so only Le/Lt/Eq/Ne remain
        let (op, swap) = match self.bump() {
            Some(Tok::EqEq) => (CmpOp::Eq, false),
            Some(Tok::NotEq) => (CmpOp::Ne, false),
            Some(Tok::Le) => (CmpOp::Le, false),
            Some(Tok::Lt) => (CmpOp::Lt, false),
            Some(Tok::Ge) => (CmpOp::Le, true),
            Some(Tok::Gt) => (CmpOp::Lt, true),
            _ => return Err(self.error("expected a comparison operator")),
        };
        let rspan = self.span();
        let (rhs, roff) = self.operand(scope.as_deref_mut())?;

        // fold both offsets onto the right-hand side
        let (lhs, rhs, offset) =
            if swap { (rhs, lhs, loff - roff) } else { (lhs, rhs, roff - loff) };

        // type discipline: object operands only in plain (dis)equality
        // between identically typed variables
        let numeric = |t: &Term, this: &Self| match t {
            Term::Var(v) => {
                let ty = &this.builder.problem.types[this.builder.problem.variables.get(*v).ty.0 as usize];
                !ty.is_object()
            }
            Term::Lit(_) => true,
        };
        let object_side = !numeric(&lhs, self) || !numeric(&rhs, self);
        if object_side {
            let types_match = match (&lhs, &rhs) {
                (Term::Var(a), Term::Var(b)) => {
                    self.builder.problem.variables.get(*a).ty == self.builder.problem.variables.get(*b).ty
                }
                _ => false,
            };
            if !types_match {
                return Err(self.error_at(rspan, "object values can only be compared to the same type"));
            }
            if offset != 0 {
                return Err(self.error_at(rspan, "offsets are not allowed on object values"));
            }
            if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                return Err(self.error_at(lspan, "object values cannot be ordered"));
            }
        }

        Ok(Constraint::atom(lhs, op, rhs, offset))
    }

    /// `ident`, `int`, optionally followed by `+ int` or `- int`.
    fn operand(&mut self, scope: Option<&mut ActionScope>) -> Step<(Term, i64)> {
        let span = self.span();
        let base = match self.peek().cloned() {
            Some(Tok::Int(_)) | Some(Tok::Minus) => Term::Lit(self.int()?),
            Some(Tok::Ident(name)) => {
                self.bump();
                match scope {
                    Some(s) if name == "start" => Term::Var(s.start),
                    Some(s) if name == "end" => Term::Var(s.end),
                    s => Term::Var(self.resolve_value(&name, span, s)?),
                }
            }
            _ => return Err(self.error("expected a variable or an integer")),
        };
        let mut offset = 0i64;
        match self.peek() {
            Some(Tok::Plus) => {
                self.bump();
                offset = self.int()?;
            }
            Some(Tok::Minus) => {
                self.bump();
                offset = -self.int()?;
            }
            _ => {}
        }
        Ok((base, offset))
    }
}

#[derive(Clone, Copy)]
enum StatementOp {
    Condition,
    Effect,
}

fn self_instant(parser: &mut Parser, n: i64) -> VarId {
    parser.builder.instant_var(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempo_core::TypeKind;

    const TRUCK: &str = r#"
// Moving a truck between locations.
type Truck = { R1 };
type Loc = { L0, L1, L2, L3 };

fluent Loc loc(Truck t);

action Go(Truck r, Loc ls, Loc le) {
  duration := 10;
  [start] loc(r) == ls;
  [start, end] loc(r) := le;
  ls != le;
};

loc(R1) := L0;

goal {
  timepoint t;
  var Loc l;
  [t] loc(R1) == l;
  t < 100;
  l in { L2, L3 };
};
"#;

    #[test]
    fn truck_source_parses_to_the_worked_example() {
        let p = parse_problem(TRUCK).expect("parses");
        assert_eq!(p.templates.len(), 1);
        let go = &p.templates[0];
        assert_eq!(go.name, "Go");
        assert_eq!(go.params.len(), 3);
        assert_eq!(go.chronicle.conditions.len(), 1);
        assert_eq!(go.chronicle.effects.len(), 1);
        // duration, ls != le, start <= end
        assert_eq!(go.chronicle.constraints.len(), 3);
        assert_eq!(p.initial.effects.len(), 1);
        assert_eq!(p.initial.conditions.len(), 1);
        assert_eq!(p.initial.constraints.len(), 2);
        assert!(tempo_core::validate_problem(&p).is_empty());
    }

    #[test]
    fn empty_input_gives_empty_problem() {
        let p = parse_problem("// nothing here\n").expect("parses");
        assert!(p.templates.is_empty());
        assert!(p.initial.effects.is_empty());
        assert!(p.initial.conditions.is_empty());
    }

    #[test]
    fn types_only_problem() {
        let p = parse_problem("type A = { a1, a2 };\n").expect("parses");
        assert_eq!(p.types.len(), 2); // time + A
        assert!(matches!(&p.types[1].kind, TypeKind::Objects(m) if m.len() == 2));
    }

    #[test]
    fn arity_mismatch_is_diagnosed_with_a_span() {
        let src = "type T = { R1 };\ntype L = { L0 };\nfluent L loc(T);\nloc(R1, R1) := L0;\n";
        let diags = parse_problem(src).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("takes 1 arguments, found 2"), "{}", diags[0].message);
        assert_eq!(diags[0].span.line, 4);
    }

    #[test]
    fn unknown_identifiers_and_type_mismatches() {
        let src = "type T = { R1 };\ntype L = { L0 };\nfluent L loc(T);\nloc(L0) := L0;\nloc(R9) := L0;\n";
        let diags = parse_problem(src).unwrap_err();
        assert_eq!(diags.len(), 2);
        assert!(diags[0].message.contains("does not have type T"));
        assert!(diags[1].message.contains("unknown identifier R9"));
    }

    #[test]
    fn multiple_errors_are_collected() {
        let src = "type T = { R1 };\nfluent X loc(T);\naction A(T r) {\n  duration := 1;\n  duration := 2;\n};\n";
        let diags = parse_problem(src).unwrap_err();
        assert!(diags.len() >= 2, "{diags:?}");
    }

    #[test]
    fn duration_range_and_intermediate_offsets() {
        let src = "type T = { R1 };\ntype L = { L0, L1 };\nfluent L loc(T);\n\
                   action Hop(T r) {\n  duration :in [2, 5];\n  [1] loc(r) == L0;\n  [all] loc(r) == L0;\n};\n";
        let p = parse_problem(src).expect("parses");
        let hop = &p.templates[0];
        // start <= end, two duration bounds, offset equality
        assert_eq!(hop.chronicle.constraints.len(), 4);
        assert_eq!(hop.chronicle.conditions.len(), 2);
        // the [1] condition sits on a derived timepoint distinct from start/end
        let c = &hop.chronicle.conditions[0];
        assert_eq!(c.start, c.end);
        assert_ne!(c.start, hop.start);
        assert_ne!(c.start, hop.end);
        // [all] spans start..end
        let c = &hop.chronicle.conditions[1];
        assert_eq!((c.start, c.end), (hop.start, hop.end));
    }

    #[test]
    fn goal_single_statement_form() {
        let src = "type T = { R1 };\ntype L = { L0, L1 };\nfluent L loc(T);\nloc(R1) := L0;\ngoal [20] loc(R1) == L1;\n";
        let p = parse_problem(src).expect("parses");
        assert_eq!(p.initial.conditions.len(), 1);
        let c = &p.initial.conditions[0];
        assert_eq!(p.variables.get(c.start).binding, Some(20));
    }

    #[test]
    fn named_intermediate_timepoints_inside_actions_are_rejected() {
        let src = "type T = { R1 };\ntype L = { L0 };\nfluent L loc(T);\n\
                   action A(T r) {\n  [mid] loc(r) == L0;\n};\n";
        let diags = parse_problem(src).unwrap_err();
        assert!(diags[0].message.contains("not supported inside actions"));
    }

    #[test]
    fn top_level_condition_requires_annotation() {
        let src = "type T = { R1 };\ntype L = { L0 };\nfluent L loc(T);\nloc(R1) == L0;\n";
        let diags = parse_problem(src).unwrap_err();
        assert!(diags[0].message.contains("time annotation"), "{diags:?}");
    }

    #[test]
    fn json_round_trip_is_identity() {
        let p = parse_problem(TRUCK).expect("parses");
        let json = problem_to_json(&p);
        let p2 = problem_from_json(&json).expect("deserializes");
        assert_eq!(p, p2);
        assert_eq!(problem_to_json(&p2), json);
    }

    #[test]
    fn integer_range_types_as_fluent_values() {
        let src = "type T = { R1 };\ntype Fuel = int [0, 5];\nfluent Fuel fuel(T);\n\
                   var Fuel f;\n[0] fuel(R1) := f;\nf == 3;\n";
        let p = parse_problem(src).expect("parses");
        assert!(matches!(p.types[2].kind, TypeKind::IntRange(0, 5)));
        assert_eq!(p.initial.effects.len(), 1);
    }
}
