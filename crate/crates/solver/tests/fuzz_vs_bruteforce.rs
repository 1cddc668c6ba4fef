//! Differential testing of the solver against exhaustive enumeration: random
//! scripts over bounded integers and booleans, with an independent evaluator
//! working directly on the parsed s-expressions.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tempo_solver::sexpr::{parse_all, Sexpr};
use tempo_solver::Engine;

const INT_VARS: usize = 4;
const BOOL_VARS: usize = 2;
const MAX_INT: i64 = 8;

struct Generated {
    script: String,
    asserts: Vec<Sexpr>,
}

fn gen_atom(rng: &mut StdRng) -> String {
    let x = rng.gen_range(0..INT_VARS);
    let y = rng.gen_range(0..INT_VARS);
    let c = rng.gen_range(-4..=9);
    match rng.gen_range(0..8) {
        0 => format!("(<= x{x} {c})"),
        1 => format!("(>= x{x} {c})"),
        2 => format!("(< (- x{x} x{y}) {c})"),
        3 => format!("(= x{x} (+ x{y} {c}))"),
        4 => format!("(= x{x} {})", rng.gen_range(0..=MAX_INT)),
        5 => format!("(not (= x{x} x{y}))"),
        6 => format!("(<= x{x} x{y})"),
        _ => {
            let p = rng.gen_range(0..BOOL_VARS);
            if rng.gen_bool(0.5) {
                format!("p{p}")
            } else {
                format!("(not p{p})")
            }
        }
    }
}

fn gen_term(rng: &mut StdRng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return gen_atom(rng);
    }
    match rng.gen_range(0..4) {
        0 => {
            let n = rng.gen_range(2..=3);
            let parts: Vec<String> = (0..n).map(|_| gen_term(rng, depth - 1)).collect();
            format!("(and {})", parts.join(" "))
        }
        1 => {
            let n = rng.gen_range(2..=3);
            let parts: Vec<String> = (0..n).map(|_| gen_term(rng, depth - 1)).collect();
            format!("(or {})", parts.join(" "))
        }
        2 => format!("(=> {} {})", gen_term(rng, depth - 1), gen_term(rng, depth - 1)),
        _ => format!("(not {})", gen_term(rng, depth - 1)),
    }
}

fn generate(rng: &mut StdRng) -> Generated {
    let mut script = String::from("(set-logic QF_LIA)\n");
    for i in 0..INT_VARS {
        script.push_str(&format!("(declare-const x{i} Int)\n"));
        script.push_str(&format!("(assert (<= 0 x{i}))\n(assert (<= x{i} {MAX_INT}))\n"));
    }
    for i in 0..BOOL_VARS {
        script.push_str(&format!("(declare-const p{i} Bool)\n"));
    }
    let n_asserts = rng.gen_range(2..=5);
    for _ in 0..n_asserts {
        script.push_str(&format!("(assert {})\n", gen_term(rng, 3)));
    }
    script.push_str("(check-sat)\n");

    let asserts = parse_all(&script)
        .unwrap()
        .into_iter()
        .filter_map(|s| match s {
            Sexpr::List(items) if items.first().and_then(Sexpr::as_sym) == Some("assert") => {
                Some(items[1].clone())
            }
            _ => None,
        })
        .collect();
    Generated { script, asserts }
}

#[derive(Clone)]
struct Assignment {
    ints: Vec<i64>,
    bools: Vec<bool>,
}

fn eval_bool(s: &Sexpr, a: &Assignment) -> bool {
    match s {
        Sexpr::Sym(name) => match name.as_str() {
            "true" => true,
            "false" => false,
            _ => {
                let i: usize = name[1..].parse().unwrap();
                assert!(name.starts_with('p'));
                a.bools[i]
            }
        },
        Sexpr::Int(_) => panic!("integer in boolean position"),
        Sexpr::List(items) => {
            let head = items[0].as_sym().unwrap();
            let args = &items[1..];
            match head {
                "not" => !eval_bool(&args[0], a),
                "and" => args.iter().all(|t| eval_bool(t, a)),
                "or" => args.iter().any(|t| eval_bool(t, a)),
                "=>" => {
                    let mut acc = eval_bool(args.last().unwrap(), a);
                    for t in args[..args.len() - 1].iter().rev() {
                        acc = !eval_bool(t, a) || acc;
                    }
                    acc
                }
                "=" => eval_int(&args[0], a) == eval_int(&args[1], a),
                "<=" => eval_int(&args[0], a) <= eval_int(&args[1], a),
                "<" => eval_int(&args[0], a) < eval_int(&args[1], a),
                ">=" => eval_int(&args[0], a) >= eval_int(&args[1], a),
                ">" => eval_int(&args[0], a) > eval_int(&args[1], a),
                other => panic!("unexpected operator {other}"),
            }
        }
    }
}

fn eval_int(s: &Sexpr, a: &Assignment) -> i64 {
    match s {
        Sexpr::Int(c) => *c,
        Sexpr::Sym(name) => {
            assert!(name.starts_with('x'));
            a.ints[name[1..].parse::<usize>().unwrap()]
        }
        Sexpr::List(items) => {
            let head = items[0].as_sym().unwrap();
            let args = &items[1..];
            match head {
                "+" => args.iter().map(|t| eval_int(t, a)).sum(),
                "-" if args.len() == 1 => -eval_int(&args[0], a),
                "-" => {
                    let mut acc = eval_int(&args[0], a);
                    for t in &args[1..] {
                        acc -= eval_int(t, a);
                    }
                    acc
                }
                other => panic!("unexpected arithmetic {other}"),
            }
        }
    }
}

fn brute_force(asserts: &[Sexpr]) -> bool {
    let mut a = Assignment { ints: vec![0; INT_VARS], bools: vec![false; BOOL_VARS] };
    let total = (MAX_INT as usize + 1).pow(INT_VARS as u32) * (1usize << BOOL_VARS);
    for idx in 0..total {
        let mut rest = idx;
        for v in 0..INT_VARS {
            a.ints[v] = (rest % (MAX_INT as usize + 1)) as i64;
            rest /= MAX_INT as usize + 1;
        }
        for b in 0..BOOL_VARS {
            a.bools[b] = rest & 1 == 1;
            rest >>= 1;
        }
        if asserts.iter().all(|t| eval_bool(t, &a)) {
            return true;
        }
    }
    false
}

fn parse_model(output: &str) -> Assignment {
    let mut ints = vec![0i64; INT_VARS];
    let mut bools = vec![false; BOOL_VARS];
    let body = output.strip_prefix("sat\n").unwrap();
    let defs = parse_all(body).unwrap();
    let mut values: HashMap<String, Sexpr> = HashMap::new();
    for def in defs[0].as_list().unwrap() {
        let items = def.as_list().unwrap();
        let name = items[1].as_sym().unwrap().to_string();
        values.insert(name, items[4].clone());
    }
    for (name, v) in values {
        match v {
            Sexpr::Int(c) if name.starts_with('x') => ints[name[1..].parse::<usize>().unwrap()] = c,
            Sexpr::Sym(b) if name.starts_with('p') => {
                bools[name[1..].parse::<usize>().unwrap()] = b == "true";
            }
            Sexpr::List(items) if name.starts_with('x') => {
                // (- n)
                let Sexpr::Int(c) = items[1] else { panic!("bad model value") };
                ints[name[1..].parse::<usize>().unwrap()] = -c;
            }
            other => panic!("unexpected model entry {name} = {other:?}"),
        }
    }
    Assignment { ints, bools }
}

#[test]
fn solver_agrees_with_bruteforce_on_random_formulas() {
    let mut rng = StdRng::seed_from_u64(0xD1FF);
    let mut sat_count = 0;
    for round in 0..400 {
        let generated = generate(&mut rng);
        let expected = brute_force(&generated.asserts);
        let output = Engine::new()
            .run_script(&generated.script)
            .unwrap_or_else(|e| panic!("round {round}: solver error {e}\n{}", generated.script));
        let got_sat = output.starts_with("sat");
        assert_eq!(
            got_sat, expected,
            "round {round}: solver={got_sat} bruteforce={expected}\n{}",
            generated.script
        );
        if got_sat {
            sat_count += 1;
            // the reported model must satisfy every assert
            let with_model = format!("{}(get-model)\n", generated.script);
            let output = Engine::new().run_script(&with_model).unwrap();
            let model = parse_model(&output);
            for t in &generated.asserts {
                assert!(
                    eval_bool(t, &model),
                    "round {round}: model violates {t}\nmodel ints {:?} bools {:?}\n{}",
                    model.ints,
                    model.bools,
                    generated.script
                );
            }
        }
    }
    // the generator should produce a healthy mix of outcomes
    assert!(sat_count > 40 && sat_count < 360, "degenerate corpus: {sat_count}/400 sat");
}
