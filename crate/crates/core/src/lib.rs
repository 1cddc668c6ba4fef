//! Chronicle-based temporal planning core.
//!
//! A planning problem is stated as an initial chronicle (facts, goals and
//! constraints) plus a set of action templates. Templates are instantiated a
//! bounded number of times into optional chronicles guarded by boolean
//! presence variables; conditions and effects become lifted timeline tokens;
//! and the whole bounded problem compiles into a CSP over integers and
//! booleans, serializable as an SMT-LIB v2 script.
//!
//! The crate also carries the two independent checking paths used to keep the
//! encoder honest: a direct semantic plan validator ([`validate`]) and an
//! exhaustive bounded-horizon enumeration oracle ([`oracle`]).
//!
//! Everything here is pure and allocation-only; IO, parsing of input formats
//! and solver processes live in the companion `tempo` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounded;
pub mod constraint;
pub mod encode;
pub mod ground;
pub mod model;
pub mod oracle;
pub mod plan;
pub mod smtlib;
pub mod validate;

pub use bounded::{gen_problem, BoundedProblem, ConditionToken, EffectToken, PresenceKind, PresenceVar};
pub use constraint::{Atom, CmpOp, Constraint, Term};
pub use encode::{encode, EncodeOptions, Formula, Sort, SortedVar};
pub use model::{
    instantiate_template, validate_chronicle, validate_problem, ActionTemplate, Chronicle,
    ChronicleId, ChronicleOrigin, Condition, Diagnostic, Effect, FluentId, FluentSignature,
    Problem, StateVarRef, TypeDef, TypeId, TypeKind, VarId, VarOrigin, VarTable, Variable,
};
pub use oracle::{brute_force_sat, enumeration_size, OracleConfig, OracleOutcome};
pub use plan::{Plan, PlanStep, PlanValue};
pub use smtlib::emit_smtlib;
pub use validate::{validate_plan, PlanError, ValidationReport, Violation};
