//! A small, self-contained SMT-LIB v2 solver for the QF_LIA fragment whose
//! atoms reduce to integer difference constraints (`x - y <= c`, unary
//! bounds, equalities with offsets) under an arbitrary boolean structure.
//!
//! The architecture is the usual lazy SMT layering: scripts are parsed into
//! typed terms ([`script`]), Tseitin-encoded into CNF with one SAT variable
//! per distinct difference atom ([`engine`]), and solved by a CDCL core
//! ([`sat`]) that lazily posts edges into an incremental difference-logic
//! graph ([`theory`]) and learns the negative cycle as a conflict clause.
//!
//! This covers exactly what a chronicle-planning encoder emits; richer
//! arithmetic is rejected with a clear error rather than mis-solved.

pub mod engine;
pub mod sat;
pub mod script;
pub mod sexpr;
pub mod theory;

pub use engine::{Engine, Value};
pub use script::ScriptError;

use std::io::Read;

/// Entry point for the `tempo-smt` binary: reads an SMT-LIB script from the
/// file given as the first argument (or stdin), evaluates it, and prints the
/// answers. Returns the process exit code.
pub fn cli_main() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let input = match args.get(1).map(String::as_str) {
        Some("--help" | "-h") => {
            println!("usage: tempo-smt [script.smt2]   (reads stdin when no file is given)");
            return 0;
        }
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("tempo-smt: cannot read {path}: {e}");
                return 1;
            }
        },
        None => {
            let mut buf = String::new();
            if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
                eprintln!("tempo-smt: cannot read stdin: {e}");
                return 1;
            }
            buf
        }
    };
    match Engine::new().run_script(&input) {
        Ok(output) => {
            print!("{output}");
            0
        }
        Err(e) => {
            println!("(error \"{e}\")");
            1
        }
    }
}
