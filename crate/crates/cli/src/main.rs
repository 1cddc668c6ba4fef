use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tempo::anml::{parse_problem, problem_to_json};
use tempo::driver::{solve, SolveOutcome};
use tempo::solver::{default_solver_command, SolverConfig};
use tempo::stats::{inject_objects, render_text, stats_table};
use tempo_core::bounded::gen_problem;
use tempo_core::encode::{encode, EncodeOptions};
use tempo_core::smtlib::emit_smtlib;
use tempo_core::{validate_plan, Plan, Problem};

/// Lifted constraint-based temporal planner over an ANML subset.
#[derive(Parser)]
#[command(name = "tempo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan: iterative deepening over bounded problems until a depth is
    /// satisfiable.
    Plan(PlanArgs),
    /// Check a plan JSON file against the problem's timeline semantics.
    Validate(ValidateArgs),
    /// Write the SMT-LIB script of every depth without solving.
    Encode(EncodeArgs),
    /// Per-depth encoding sizes (variables, assertions per family).
    Stats(StatsArgs),
    /// Parse a problem and print its canonical JSON.
    Json(JsonArgs),
}

#[derive(Args)]
struct EncodingFlags {
    /// Disable the symmetry-breaking constraints.
    #[arg(long = "no-symmetry")]
    no_symmetry: bool,
    /// Keep statically true assertions (full pairwise coherence).
    #[arg(long = "no-pruning")]
    no_pruning: bool,
}

impl EncodingFlags {
    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            symmetry: !self.no_symmetry,
            prune_static: !self.no_pruning,
            horizon: None,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Problem file (ANML subset).
    input: PathBuf,
    /// Maximum depth of the deepening loop.
    #[arg(long, default_value_t = 10)]
    kmax: u32,
    /// Overall wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Solver command line (default: the bundled tempo-smt, or $TEMPO_SOLVER).
    #[arg(long)]
    solver: Option<String>,
    /// Persist each depth's script as depth_<k>.smt2 in this directory.
    #[arg(long = "emit-smt")]
    emit_smt: Option<PathBuf>,
    #[command(flatten)]
    encoding: EncodingFlags,
    #[arg(long, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ValidateArgs {
    /// Problem file (ANML subset).
    input: PathBuf,
    /// Plan JSON file.
    plan: PathBuf,
    #[arg(long, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    kmax: u32,
    /// Output directory for depth_<k>.smt2 files.
    #[arg(long = "emit-smt", default_value = ".")]
    emit_smt: PathBuf,
    #[command(flatten)]
    encoding: EncodingFlags,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 4)]
    kmax: u32,
    /// Add N unused objects to every enumeration type first (e.g. +50).
    #[arg(long)]
    objects: Option<String>,
    #[command(flatten)]
    encoding: EncodingFlags,
    #[arg(long, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct JsonArgs {
    input: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Cmd::Plan(args) => run_plan(args),
        Cmd::Validate(args) => run_validate(args),
        Cmd::Encode(args) => run_encode(args),
        Cmd::Stats(args) => run_stats(args),
        Cmd::Json(args) => run_json(args),
    };
    ExitCode::from(code)
}

/// Reads and parses the problem, printing diagnostics to stderr on failure.
fn load_problem(path: &PathBuf) -> Result<Problem, u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(2);
        }
    };
    match parse_problem(&text) {
        Ok(p) => Ok(p),
        Err(diags) => {
            for d in &diags {
                eprintln!("{}:{d}", path.display());
            }
            Err(2)
        }
    }
}

fn run_plan(args: PlanArgs) -> u8 {
    let problem = match load_problem(&args.input) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let command = match default_solver_command(args.solver.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut cfg = SolverConfig::new(command);
    cfg.k_max = args.kmax;
    cfg.deadline = args.timeout.map(Duration::from_secs_f64);

    let outcome = solve(&problem, &cfg, &args.encoding.options(), args.emit_smt.as_deref());
    match outcome {
        SolveOutcome::Solution { plan, depth, wall } => {
            match args.format {
                Format::Json => {
                    let payload = json!({
                        "outcome": "solution",
                        "depth": depth,
                        "wall_ms": wall.as_millis() as u64,
                        "plan": plan,
                    });
                    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
                }
                Format::Text => {
                    println!("solution at depth {depth} ({} ms)", wall.as_millis());
                    print!("{plan}");
                }
            }
            0
        }
        SolveOutcome::Exhausted { k_max, wall } => {
            match args.format {
                Format::Json => {
                    let payload = json!({
                        "outcome": "exhausted",
                        "k_max": k_max,
                        "wall_ms": wall.as_millis() as u64,
                    });
                    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
                }
                Format::Text => {
                    println!("no plan up to depth {k_max} ({} ms)", wall.as_millis());
                }
            }
            1
        }
        SolveOutcome::Timeout { depth, wall } => {
            eprintln!("timeout while solving depth {depth} ({} ms elapsed)", wall.as_millis());
            if args.format == Format::Json {
                let payload = json!({ "outcome": "timeout", "depth": depth });
                println!("{}", serde_json::to_string_pretty(&payload).unwrap());
            }
            2
        }
        SolveOutcome::SolverError { depth, message } => {
            eprintln!("solver error at depth {depth}: {message}");
            if args.format == Format::Json {
                let payload = json!({ "outcome": "error", "depth": depth, "message": message });
                println!("{}", serde_json::to_string_pretty(&payload).unwrap());
            }
            2
        }
    }
}

fn run_validate(args: ValidateArgs) -> u8 {
    let problem = match load_problem(&args.input) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let plan_text = match std::fs::read_to_string(&args.plan) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.plan.display());
            return 2;
        }
    };
    let plan: Plan = match serde_json::from_str(&plan_text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: invalid plan JSON: {e}");
            return 2;
        }
    };
    match validate_plan(&problem, &plan) {
        Ok(report) => {
            match args.format {
                Format::Json => {
                    let payload = json!({
                        "valid": report.is_valid(),
                        "violations": report.violations,
                    });
                    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
                }
                Format::Text => print!("{report}"),
            }
            u8::from(!report.is_valid())
        }
        Err(e) => {
            eprintln!("error: plan is ill-typed: {e}");
            2
        }
    }
}

fn run_encode(args: EncodeArgs) -> u8 {
    let problem = match load_problem(&args.input) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let opts = args.encoding.options();
    if let Err(e) = std::fs::create_dir_all(&args.emit_smt) {
        eprintln!("error: cannot create {}: {e}", args.emit_smt.display());
        return 2;
    }
    for k in 0..=args.kmax {
        let pi = gen_problem(&problem, k);
        let formula = encode(&problem, &pi, &opts);
        let path = args.emit_smt.join(format!("depth_{k}.smt2"));
        if let Err(e) = std::fs::write(&path, emit_smtlib(&formula)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
        println!("{}", path.display());
    }
    0
}

fn run_stats(args: StatsArgs) -> u8 {
    let mut problem = match load_problem(&args.input) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if let Some(spec) = &args.objects {
        let trimmed = spec.trim_start_matches('+');
        match trimmed.parse::<usize>() {
            Ok(extra) => inject_objects(&mut problem, extra),
            Err(_) => {
                eprintln!("error: --objects expects +N, got {spec}");
                return 2;
            }
        }
    }
    let rows = stats_table(&problem, args.kmax, &args.encoding.options());
    match args.format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(&json!({ "rows": rows })).unwrap());
        }
        Format::Text => print!("{}", render_text(&rows)),
    }
    0
}

fn run_json(args: JsonArgs) -> u8 {
    match load_problem(&args.input) {
        Ok(p) => {
            print!("{}", problem_to_json(&p));
            0
        }
        Err(code) => code,
    }
}
