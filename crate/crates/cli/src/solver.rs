//! External SMT solver management: spawns the configured solver process,
//! feeds it the SMT-LIB script over stdin, and parses `sat`/`unsat` plus the
//! model back. The solver command is fully configurable so any SMT-LIB v2
//! solver (z3, cvc5, the bundled `tempo-smt`, ...) can serve as the backend.

use std::collections::BTreeMap;
use std::env;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use tempo_core::encode::{Formula, Sort};
use tempo_core::smtlib::emit_smtlib;
use tempo_solver::sexpr::{parse_all, Sexpr};

/// Environment variable overriding the default solver command.
pub const SOLVER_ENV: &str = "TEMPO_SOLVER";

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Full command line, split shell-style on whitespace with quotes.
    pub command: String,
    /// Wall-clock budget across all depths; `None` means unbounded.
    pub deadline: Option<Duration>,
    /// Maximum depth of the iterative deepening loop.
    pub k_max: u32,
}

impl SolverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        SolverConfig { command: command.into(), deadline: None, k_max: 10 }
    }
}

/// Picks the solver command: explicit flag, then the environment override,
/// then a `tempo-smt` binary next to the current executable, then `tempo-smt`
/// from the PATH.
pub fn default_solver_command(explicit: Option<&str>) -> Result<String, String> {
    if let Some(cmd) = explicit {
        return Ok(cmd.to_string());
    }
    if let Ok(cmd) = env::var(SOLVER_ENV) {
        if !cmd.trim().is_empty() {
            return Ok(cmd);
        }
    }
    if let Ok(exe) = env::current_exe() {
        let mut sibling = exe.clone();
        sibling.set_file_name(binary_name());
        if sibling.is_file() {
            return Ok(sibling.to_string_lossy().into_owned());
        }
        // integration tests run from target/<profile>/deps
        if let Some(parent) = exe.parent().and_then(|p| p.parent()) {
            let candidate: PathBuf = parent.join(binary_name());
            if candidate.is_file() {
                return Ok(candidate.to_string_lossy().into_owned());
            }
        }
    }
    Ok("tempo-smt".to_string())
}

fn binary_name() -> &'static str {
    if cfg!(windows) {
        "tempo-smt.exe"
    } else {
        "tempo-smt"
    }
}

/// A satisfying assignment reported by the solver.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    values: BTreeMap<String, ModelValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelValue {
    Int(i64),
    Bool(bool),
}

impl Model {
    pub fn int(&self, name: &str) -> Option<i64> {
        match self.values.get(name) {
            Some(ModelValue::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn bool(&self, name: &str) -> Option<bool> {
        match self.values.get(name) {
            Some(ModelValue::Bool(b)) => Some(*b),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub enum CheckOutcome {
    Sat(Model),
    Unsat,
    Timeout,
    Error(String),
}

/// Runs the solver on the formula's script and interprets the answer. Model
/// values are checked against the formula's declared sorts and domain bounds;
/// anything unexpected (including `unknown`) is an error outcome.
pub fn check_smt(formula: &Formula, command: &str, timeout: Option<Duration>) -> CheckOutcome {
    let script = emit_smtlib(formula);
    let output = match run_process(command, &script, timeout) {
        Ok(ProcessResult::Completed(out)) => out,
        Ok(ProcessResult::TimedOut) => return CheckOutcome::Timeout,
        Err(e) => return CheckOutcome::Error(e),
    };
    parse_answer(&output, formula)
}

fn parse_answer(output: &str, formula: &Formula) -> CheckOutcome {
    let mut lines = output.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with(';'));
    match lines.next() {
        Some("unsat") => CheckOutcome::Unsat,
        Some("unknown") => CheckOutcome::Error("solver answered unknown".into()),
        Some("sat") => {
            let rest: String = lines.collect::<Vec<_>>().join("\n");
            match parse_model(&rest) {
                Ok(model) => match validate_model(&model, formula) {
                    Ok(()) => CheckOutcome::Sat(model),
                    Err(e) => CheckOutcome::Error(e),
                },
                Err(e) => CheckOutcome::Error(format!("malformed model: {e}")),
            }
        }
        Some(other) => CheckOutcome::Error(format!("unexpected solver answer: {other}")),
        None => CheckOutcome::Error("solver produced no output".into()),
    }
}

/// Accepts both model shapes: `(define-fun x () Int 5)` entries (with or
/// without a leading `model` keyword) and `get-value` style `((x 5) ...)`
/// pairs. Negative numerals may be written `(- 5)`.
fn parse_model(text: &str) -> Result<Model, String> {
    let mut model = Model::default();
    if text.trim().is_empty() {
        return Ok(model);
    }
    let sexprs = parse_all(text).map_err(|e| e.to_string())?;
    for top in &sexprs {
        let Some(items) = top.as_list() else {
            return Err(format!("expected a list, got {top}"));
        };
        for entry in items {
            match entry {
                Sexpr::Sym(s) if s == "model" => continue,
                Sexpr::List(parts) => parse_model_entry(parts, &mut model)?,
                other => return Err(format!("unexpected model entry {other}")),
            }
        }
    }
    Ok(model)
}

fn parse_model_entry(parts: &[Sexpr], model: &mut Model) -> Result<(), String> {
    match parts {
        // (define-fun name () Sort value)
        [Sexpr::Sym(kw), Sexpr::Sym(name), Sexpr::List(args), _sort, value] if kw == "define-fun" => {
            if !args.is_empty() {
                return Err(format!("{name} is not a constant"));
            }
            model.values.insert(name.clone(), parse_value(value)?);
            Ok(())
        }
        // (name value), the get-value shape
        [Sexpr::Sym(name), value] => {
            model.values.insert(name.clone(), parse_value(value)?);
            Ok(())
        }
        other => Err(format!("unrecognized model entry {:?}", other)),
    }
}

fn parse_value(v: &Sexpr) -> Result<ModelValue, String> {
    match v {
        Sexpr::Int(i) => Ok(ModelValue::Int(*i)),
        Sexpr::Sym(s) if s == "true" => Ok(ModelValue::Bool(true)),
        Sexpr::Sym(s) if s == "false" => Ok(ModelValue::Bool(false)),
        Sexpr::List(items) => match items.as_slice() {
            [Sexpr::Sym(minus), Sexpr::Int(i)] if minus == "-" => Ok(ModelValue::Int(-i)),
            _ => Err(format!("unsupported value {v}")),
        },
        other => Err(format!("unsupported value {other}")),
    }
}

/// Every declared variable must be assigned a value of its sort within its
/// domain bounds.
fn validate_model(model: &Model, formula: &Formula) -> Result<(), String> {
    for sv in &formula.vars {
        match sv.sort {
            Sort::Bool => {
                if model.bool(&sv.name).is_none() {
                    return Err(format!("model is missing boolean {}", sv.name));
                }
            }
            Sort::Int => {
                let Some(v) = model.int(&sv.name) else {
                    return Err(format!("model is missing integer {}", sv.name));
                };
                if sv.lower.is_some_and(|lo| v < lo) || sv.upper.is_some_and(|hi| v > hi) {
                    return Err(format!(
                        "model value {v} for {} violates its domain bounds",
                        sv.name
                    ));
                }
            }
        }
    }
    Ok(())
}

enum ProcessResult {
    Completed(String),
    TimedOut,
}

/// Spawns the solver, writes the script, and reads the full response, killing
/// the process if the timeout elapses first.
fn run_process(command: &str, script: &str, timeout: Option<Duration>) -> Result<ProcessResult, String> {
    let parts = split_command(command);
    let (program, args) = parts.split_first().ok_or("empty solver command")?;

    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot start solver '{program}': {e}"))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let script_owned = script.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(script_owned.as_bytes());
        // dropping stdin closes the pipe, signalling end of script
    });

    let mut stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let res = stdout.read_to_string(&mut buf).map(|_| buf);
        let _ = tx.send(res);
    });

    let started = Instant::now();
    let result = match timeout {
        Some(limit) => match rx.recv_timeout(limit.saturating_sub(started.elapsed())) {
            Ok(res) => res,
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = writer.join();
                let _ = reader.join();
                return Ok(ProcessResult::TimedOut);
            }
        },
        None => match rx.recv() {
            Ok(res) => res,
            Err(e) => return Err(format!("solver pipe closed unexpectedly: {e}")),
        },
    };
    let _ = writer.join();
    let _ = reader.join();
    let status = child.wait().map_err(|e| e.to_string())?;
    let output = result.map_err(|e| format!("cannot read solver output: {e}"))?;

    if output.trim().is_empty() && !status.success() {
        return Err(format!("solver exited with {status} and no output"));
    }
    Ok(ProcessResult::Completed(output))
}

/// Whitespace splitting with single/double quotes, enough for solver command
/// lines like `z3 -in` or `/path with space/solver --opt "a b"`.
pub fn split_command(command: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for c in command.chars() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                } else {
                    cur.push(c);
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                c if c.is_whitespace() => {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                }
                c => cur.push(c),
            },
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
